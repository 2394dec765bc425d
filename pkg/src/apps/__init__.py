"""Warp Concavity 應用層。"""
