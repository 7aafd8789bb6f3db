"""
核心基础设施模块
包含配置管理、日志配置、错误类型等基础功能
所有导入都应该直接使用文件路径，例如：
- from utils.core.config import Config
- from utils.core.logging import setup_logger
- from utils.core.errors import IngestError
"""
