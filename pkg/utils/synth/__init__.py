"""
合成数据模块
所有导入都应该直接使用文件路径，例如：
- from utils.synth.scenario import preset_scenario
- from utils.synth.generator import generate
- from utils.synth.writer import write_dataset
"""
