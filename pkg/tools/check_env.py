"""
检查 .env 是否包含 env.sample 中的全部变量，并校验数值型配置能否解析
"""
import os

from dotenv import dotenv_values

NUMERIC = {
    "LOG_RETENTION_DAYS": int,
    "PIPELINE_WORKERS": int,
    "ROOT_SEED": int,
    "GRID_MONTHS_BEFORE": int,
    "GRID_MONTHS_AFTER": int,
    "CFF_TOP_K": int,
    "PATH_EXACT_THRESHOLD": int,
    "PATH_SAMPLE_SOURCES": int,
    "HOMOPHILY_MIN_INCIDENCES": int,
    "POWER_ITER_TOL": float,
    "POWER_ITER_MAX": int,
}

CHOICES = {"PIPELINE_BACKEND": ("process", "thread")}


def check_env_vars(sample_path: str = "env.sample", env_path: str = ".env") -> bool:
    if not os.path.exists(sample_path):
        print(f"找不到 {sample_path}，请在项目根目录运行")
        return False
    sample_vars = set(dotenv_values(sample_path))

    if not os.path.exists(env_path):
        print(f"'{env_path}' 不存在，将全部使用默认值。可配置的变量:")
        for var in sorted(sample_vars):
            print(f"- {var}")
        return False

    env = dotenv_values(env_path)
    ok = True
    missing = sorted(sample_vars - set(env))
    if missing:
        ok = False
        print("⚠️ .env 中缺少以下变量（将使用默认值）:")
        for var in missing:
            print(f"- {var}")

    backend = env.get("PIPELINE_BACKEND")
    if backend is not None and backend.strip().lower() not in CHOICES["PIPELINE_BACKEND"]:
        ok = False
        print(f"⚠️ PIPELINE_BACKEND={backend} 不在可选值 {CHOICES['PIPELINE_BACKEND']} 中")

    for var, kind in NUMERIC.items():
        value = env.get(var)
        if value is None:
            continue
        try:
            kind(value)
        except ValueError:
            ok = False
            print(f"⚠️ {var}={value} 无法解析为 {kind.__name__}")

    if ok:
        print("✅ .env 配置完整")
    return ok


if __name__ == "__main__":
    check_env_vars()
