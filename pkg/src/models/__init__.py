"""Models - pydantic data structures shared by every layer.

Purpose
=======

1. **CLI configuration** (cli.py)
   - RunConfig: the flat table of every experiment setting, read from a
     ``key = value`` file and overridden by flags
   - Command: the subcommands of ``rcml``
   - LogLevel: logging level enumeration

2. **Domain models** (domain/)
   - Records: ``Sample`` and ``RelationEdge``, the two JSONL line schemas
   - Stage configurations: ``GeneratorConfig``, ``ModelConfig``,
     ``LossConfig``, ``TrainConfig``, ``EvalConfig`` (frozen)
   - Reports: ``TrainReport``, ``MetricsReport``, ``GradCheckReport``,
     ``ClipCheckReport``

Library code only receives the typed stage configurations; ``RunConfig``
exists for the command line and projects onto them through its ``to_*()``
methods.

Usage Examples
==============

.. code-block:: python

    from src.models import RunConfig

    cfg = RunConfig(beta=0.4, max_epochs=5)
    train_cfg = cfg.to_train()
    print(train_cfg.model.beta)  # 0.4
    print(cfg.config_hash())
"""

from __future__ import annotations

from .cli import Command, LogLevel, RunConfig

__all__ = [
    "Command",
    "LogLevel",
    "RunConfig",
]
