"""
统计推断模块
所有导入都应该直接使用文件路径，例如：
- from utils.inference.ols import ols_fit
- from utils.inference.models import persistence_regression
"""
