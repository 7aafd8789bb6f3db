"""
运行清单 - 与输出文件写在同一目录，记录复现一次运行所需的全部参数

清单不含时间戳和主机信息，相同清单重复运行得到逐字节相同的输出。
"""
from dataclasses import asdict
from dataclasses import dataclass
from dataclasses import field
import json
from pathlib import Path
from typing import Any, Dict, List, Union

from ..core.errors import MissingPrerequisiteError

TOOL_NAME = "cohortnet"
TOOL_VERSION = "0.3.0"
MANIFEST_FILE = "manifest.json"


@dataclass
class RunManifest:
    inputs: Dict[str, str]
    scope: str
    unit: str
    metrics: List[str]
    root_seed: int
    output_dir: str
    parameters: Dict[str, Any] = field(default_factory=dict)
    cohorts: List[str] = field(default_factory=list)
    tool: str = f"{TOOL_NAME} {TOOL_VERSION}"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def write(self, out_dir: Union[str, Path, None] = None) -> Path:
        path = Path(out_dir or self.output_dir) / MANIFEST_FILE
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, ensure_ascii=False, indent=2, sort_keys=True)
            f.write("\n")
        return path

    @classmethod
    def load(cls, out_dir: Union[str, Path]) -> "RunManifest":
        path = Path(out_dir) / MANIFEST_FILE
        if not path.exists():
            raise MissingPrerequisiteError(f"{path} 不存在，请先运行 metrics 命令")
        with path.open("r", encoding="utf-8") as f:
            data = json.load(f)
        return cls(**data)
