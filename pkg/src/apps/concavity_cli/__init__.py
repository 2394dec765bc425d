"""Concavity CLI - 情境驅動的命令列介面，基於 warp_concavity。"""
