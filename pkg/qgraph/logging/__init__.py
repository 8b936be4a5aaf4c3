"""
qgraph logging
==============

Context-aware logging shared by the numerical modules and the CLI:
- run id tracking across a job
- console output for local work, JSON lines elsewhere
- metadata enrichment per module, per run and per call

Usage
-----

```python
from qgraph.logging import get_logger

logger = get_logger("spectrum", metadata={"component": "spectrum"})
logger.info("Located eigenvalues", metadata={"count": 51, "k_max": 50.5})
```

The CLI calls `configure_logging()` once and sets a run id:

```python
from qgraph.logging import configure_logging, set_run_id

configure_logging()
set_run_id("3f2a...")
```
"""

from qgraph.logging.context import get_logger, ContextLoggerAdapter
from qgraph.logging.context_vars import (
    set_run_id,
    get_run_id,
    add_metadata,
    get_metadata,
    clear_metadata,
)
from qgraph.logging.logger_config import (
    LOG_LEVEL,
    ENVIRONMENT,
    IS_LOCAL,
    SERVICE_NAME,
    SERVICE_VERSION,
    configure_logging,
)

__all__ = [
    "get_logger",
    "ContextLoggerAdapter",
    "set_run_id",
    "get_run_id",
    "add_metadata",
    "get_metadata",
    "clear_metadata",
    "LOG_LEVEL",
    "ENVIRONMENT",
    "IS_LOCAL",
    "SERVICE_NAME",
    "SERVICE_VERSION",
    "configure_logging",
]
