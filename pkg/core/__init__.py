"""
BD Predator-Prey 核心模块
"""
