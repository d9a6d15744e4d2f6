# config_manager is imported from config.config_manager directly; it logs through utils at import time
from utils.structured_logger import get_logger

__all__ = ['get_logger']
