import logging
import os
from datetime import datetime


def setup_logger():
    """Setup logging for the scino-order pipeline"""

    # Create logs directory if it doesn't exist
    log_dir = os.environ.get("SCINO_LOG_DIR", "logs")
    if not os.path.exists(log_dir):
        os.makedirs(log_dir, exist_ok=True)

    # Generate log filename with timestamp
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    log_file = os.path.join(log_dir, f"scino_{timestamp}.log")

    log_format = "%(asctime)s | %(levelname)-8s | %(name)-12s | %(funcName)-20s | Line:%(lineno)-4d | %(message)s"
    level_name = os.environ.get("SCINO_LOG_LEVEL", "INFO").upper()

    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format=log_format,
        handlers=[
            logging.FileHandler(log_file, encoding="utf-8"),
            logging.StreamHandler(),  # Also log to console
        ],
    )

    # Create specific loggers for different components
    loggers = {
        "main": logging.getLogger("main"),
        "train": logging.getLogger("train"),
        "ordering": logging.getLogger("ordering"),
        "stein": logging.getLogger("stein"),
        "control": logging.getLogger("control"),
        "api": logging.getLogger("api"),
        "error": logging.getLogger("error"),
    }

    loggers["error"].setLevel(logging.ERROR)
    loggers["api"].setLevel(logging.INFO)

    return loggers, log_file


# Initialize loggers
loggers, current_log_file = setup_logger()

# Export commonly used loggers
main_logger = loggers["main"]
train_logger = loggers["train"]
ordering_logger = loggers["ordering"]
stein_logger = loggers["stein"]
control_logger = loggers["control"]
api_logger = loggers["api"]
error_logger = loggers["error"]


def log_action(action_type: str, details: str, run_id: str = None):
    """Log pipeline actions with run context"""
    context = f"Run:{run_id}" if run_id else "No-Run"
    main_logger.info(f"ACTION[{action_type}] | {context} | {details}")


def log_error(error_type: str, error_msg: str, function_name: str = None, run_id: str = None):
    """Log errors with context"""
    context = f"Run:{run_id}" if run_id else "No-Run"
    if function_name:
        context += f" | Function:{function_name}"

    error_logger.error(f"ERROR[{error_type}] | {context} | {error_msg}")


def log_api_call(api_name: str, status: str, details: str = None, latency_ms: float = None):
    """Log remote prior calls; never pass secrets in details"""
    latency_info = f" | Latency:{latency_ms:.0f}ms" if latency_ms is not None else ""
    detail_info = f" | {details}" if details else ""

    api_logger.info(f"API[{api_name}] | Status:{status}{latency_info}{detail_info}")


def log_step(step: int, node: str, details: str):
    """Log one leaf-removal step of an ordering or control run"""
    ordering_logger.info(f"STEP[{step}] | Node:{node} | {details}")