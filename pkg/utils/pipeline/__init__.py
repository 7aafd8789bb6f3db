"""
分析流水线模块
包含指标计算、回归、图表数据与运行清单
所有导入都应该直接使用文件路径，例如：
- from utils.pipeline.runner import run_metrics
- from utils.pipeline.figures import run_figures
"""
