import logging
import sys
from datetime import datetime
from pathlib import Path

from qcdyn.core.config import settings


def setup_logging(level: str = None):
    handlers = [logging.StreamHandler(sys.stderr)]

    if settings.LOG_TO_FILE:
        log_dir = Path(settings.LOG_DIR)
        log_dir.mkdir(exist_ok=True)
        log_file = log_dir / f"qcdyn_{datetime.now().strftime('%Y%m%d')}.log"
        handlers.append(logging.FileHandler(log_file, encoding='utf-8'))

    logging.basicConfig(
        level=getattr(logging, (level or settings.LOG_LEVEL).upper()),
        format="%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s",
        handlers=handlers,
        force=True,
    )

    logging.getLogger("matplotlib").setLevel(logging.WARNING)

    logger = logging.getLogger(__name__)
    logger.debug("Logging system initialized")
