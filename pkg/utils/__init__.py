"""
Utils 模块 - 模块化结构
所有导入都应该直接使用子模块路径，例如：
- from utils.graph.dataset import load_bundle
- from utils.metrics.homophily import homophily_series
- from utils.pipeline.runner import run_metrics
"""

# 这个文件只作为包的标识，不提供任何导入
# 所有功能都应该直接从对应的子模块导入
