from .main import COMMAND_EXECUTORS, build_parser, main

__all__ = ["COMMAND_EXECUTORS", "build_parser", "main"]
