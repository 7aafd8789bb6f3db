"""
网络指标模块
包含关系形成、同质性、结构、中心性与持续性指标
所有导入都应该直接使用文件路径，例如：
- from utils.metrics.formation import edge_volume
- from utils.metrics.homophily import homophily_series
- from utils.metrics.structure import structural_snapshot
"""
