"""
错误类型定义
每个错误都带有稳定的 code，命令行出错时以 JSON 行输出
"""
from typing import Optional, Sequence


class CohortNetError(Exception):
    """所有领域错误的基类"""
    code = "error"

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else self.code


class IngestError(CohortNetError, ValueError):
    """CSV 行格式错误，line 为文件中的行号（表头为第1行）"""
    code = "ingest_error"

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        super().__init__(message)
        self.path = path
        self.line = line


class MissingInputError(CohortNetError, FileNotFoundError):
    code = "missing_input"


class GridRangeError(CohortNetError, IndexError):
    code = "grid_range"


class UnknownCohortError(CohortNetError, KeyError):
    code = "unknown_cohort"


class EmptyCohortError(CohortNetError, ValueError):
    code = "empty_cohort"


class RankDeficiencyError(CohortNetError, ValueError):
    """设计矩阵列不满秩，columns 为共线的列名"""
    code = "rank_deficient"

    def __init__(self, message: str, columns: Sequence[str] = ()):
        super().__init__(message)
        self.columns = list(columns)


class InfeasibleScenarioError(CohortNetError, ValueError):
    code = "infeasible_scenario"


class UnknownMetricError(CohortNetError, ValueError):
    code = "unknown_metric"


class MissingPrerequisiteError(CohortNetError, FileNotFoundError):
    code = "missing_prerequisite"
