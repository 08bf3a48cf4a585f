"""
Optimal-wait command-line entry point.

This script configures logging and dispatches to the optimal-wait CLI.
"""
import logging
import os
import sys
import traceback

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

try:
    from src.optimal_wait.cli import run_cli
except ImportError:
    traceback.print_exc()
    sys.exit(1)

# --- Logging Configuration ---
# stdout carries results, so log records go to stderr
_level = os.getenv('OPTWAIT_LOG_LEVEL', 'WARNING').upper()
_handlers = [logging.StreamHandler(sys.stderr)]
if os.getenv('OPTWAIT_LOG_FILE'):
    _handlers.append(logging.FileHandler(os.environ['OPTWAIT_LOG_FILE']))
logging.basicConfig(
    level=_level if _level in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL') else 'WARNING',
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=_handlers
)
logger = logging.getLogger(__name__)


def main() -> int:
    """
    Main entry point for the CLI.

    Returns:
        Exit code (0 success, 1 usage error, 2 data error)
    """
    return run_cli(sys.argv[1:])


if __name__ == "__main__":
    try:
        sys.exit(main())
    except Exception:
        traceback.print_exc()
        sys.exit(2)
