"""
Results journal for schrodecay
Appends one line per command to journal.jsonl in the output directory
"""
import json
import logging
import os
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from typing import Dict, List, Sequence

import psutil

from config import VERSION, RunConfig
from documents import file_digest

logger = logging.getLogger(__name__)

JOURNAL_NAME = "journal.jsonl"


@dataclass(frozen=True)
class JournalEntry:
    timestamp: str
    command: str
    config_hash: str
    input_digest: str
    output_digests: Dict[str, str]
    version: str
    rss_mb: float


def journal_path(out_dir: str) -> str:
    return os.path.join(out_dir, JOURNAL_NAME)


def log_command(command: str, config: RunConfig, outputs: Sequence[str]) -> JournalEntry:
    """Record a finished command with the digests of its input symbol file and output documents"""
    entry = JournalEntry(
        timestamp=datetime.now(timezone.utc).isoformat(),
        command=command,
        config_hash=config.config_hash(),
        input_digest=file_digest(config.symbol_path),
        output_digests={os.path.basename(path): file_digest(path) for path in outputs},
        version=VERSION,
        rss_mb=round(psutil.Process().memory_info().rss / 1024 ** 2, 1),
    )
    os.makedirs(config.out_dir, exist_ok=True)
    with open(journal_path(config.out_dir), "a", encoding="utf-8") as f:
        f.write(json.dumps(asdict(entry), sort_keys=False) + "\n")
    logger.info(f"📝 Journal: {command} with {len(outputs)} output(s), config {entry.config_hash[:12]}")
    return entry


def read_journal(out_dir: str) -> List[JournalEntry]:
    path = journal_path(out_dir)
    if not os.path.exists(path):
        return []
    with open(path, "r", encoding="utf-8") as f:
        return [JournalEntry(**json.loads(line)) for line in f if line.strip()]


def verify_journal(out_dir: str) -> List[dict]:
    """
    Re-hash every document named in the journal against its most recent entry.
    Returns the mismatches; an empty list means the journal verifies.
    """
    latest: Dict[str, str] = {}
    for entry in read_journal(out_dir):
        latest.update(entry.output_digests)
    mismatches = []
    for name, expected in latest.items():
        path = os.path.join(out_dir, name)
        if not os.path.exists(path):
            mismatches.append({"file": name, "expected": expected, "actual": None})
            continue
        actual = file_digest(path)
        if actual != expected:
            mismatches.append({"file": name, "expected": expected, "actual": actual})
    if mismatches:
        logger.warning(f"⚠️ Journal: {len(mismatches)} document(s) changed since they were recorded")
    else:
        logger.info(f"✅ Journal: {len(latest)} document digest(s) verified")
    return mismatches
