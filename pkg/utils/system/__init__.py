"""
系统管理模块
包含按班级并行的进程 / 线程池和随机种子派生
所有导入都应该直接使用文件路径，例如：
- from utils.system.task_pool import CohortTaskExecutor
- from utils.system.seeds import derive_seed
"""
