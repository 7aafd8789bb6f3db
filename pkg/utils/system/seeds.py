"""
随机种子派生 - 由根种子和稳定的任务键得到每个任务独立的种子

任务键只由班级、时间下标等确定性信息构成，结果与调度顺序和线程数无关。
"""
import hashlib
from typing import Optional, Union

import numpy as np

from ..core.config import Config

KeyPart = Union[str, int]


def _key_words(part: KeyPart):
    digest = hashlib.sha256(str(part).encode("utf-8")).digest()
    return [int.from_bytes(digest[k:k + 4], "little") for k in range(0, 8, 4)]


def derive_seed(*key: KeyPart, root_seed: Optional[int] = None) -> int:
    """
    派生种子

    参数:
        key: 任务键，例如 ("path", "s1:2011", 12)
        root_seed: 根种子，默认取配置 ROOT_SEED

    返回:
        63位非负整数种子，随结果写入输出
    """
    root = Config().root_seed if root_seed is None else int(root_seed)
    words = [root & 0xFFFFFFFF, root >> 32]
    for part in key:
        words.extend(_key_words(part))
    state = np.random.SeedSequence(words).generate_state(2, dtype=np.uint32)
    return int((int(state[1]) << 32 | int(state[0])) & 0x7FFFFFFFFFFFFFFF)


def task_rng(*key: KeyPart, root_seed: Optional[int] = None) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*key, root_seed=root_seed))
