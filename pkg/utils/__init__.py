"""
BD Predator-Prey 工具模块
"""
