"""
时间图模块
包含边事件读取、节点属性、时间网格和快照视图
所有导入都应该直接使用文件路径，例如：
- from utils.graph.temporal import ingest_edges
- from utils.graph.snapshot import SnapshotChain
- from utils.graph.dataset import load_bundle
"""
