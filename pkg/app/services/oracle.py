# app/services/oracle.py
"""
Brute-force ground truth by repair enumeration.

Repairs are numbered by a mixed-radix counter over the blocks of db sorted
by (relation, key), first block most significant. Any counter range can be
enumerated on its own, so the work splits across workers.
"""
import logging
import math
from collections.abc import Iterator
from concurrent.futures import ThreadPoolExecutor

from app.models import Database, Query
from app.services.evaluation import eval_bcq
from app.utils import settings
from app.utils.errors import RepairSpaceTooLarge

log = logging.getLogger(__name__)


def count_repairs(db: Database, cap: int | None = None) -> int:
    limit = settings.ORACLE_CAP if cap is None else cap
    total = 1
    for block in db.all_blocks():
        total *= len(block)
        if total > limit:
            raise RepairSpaceTooLarge(f"more than {limit} repairs")
    return total


def iter_repairs(db: Database, start: int = 0, stop: int | None = None) -> Iterator[Database]:
    blocks = db.all_blocks()
    total = math.prod(len(b) for b in blocks)
    end = total if stop is None else min(stop, total)
    for number in range(start, end):
        chosen = []
        rest = number
        for block in reversed(blocks):
            rest, digit = divmod(rest, len(block))
            chosen.append(block[digit])
        yield db.replace(chosen)


def _all_satisfy(q: Query, db: Database, start: int, stop: int) -> bool:
    return all(eval_bcq(q, r) for r in iter_repairs(db, start, stop))


def certain_oracle(q: Query, db: Database, cap: int | None = None, workers: int = 1) -> bool:
    total = count_repairs(db, cap)
    if workers <= 1 or total < 2 * workers:
        return _all_satisfy(q, db, 0, total)
    step = math.ceil(total / workers)
    ranges = [(lo, min(lo + step, total)) for lo in range(0, total, step)]
    log.debug("oracle: %d repairs over %d ranges", total, len(ranges))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = pool.map(lambda r: _all_satisfy(q, db, *r), ranges)
        return all(results)


def falsifying_repair(q: Query, db: Database, cap: int | None = None) -> Database | None:
    count_repairs(db, cap)
    for repair in iter_repairs(db):
        if not eval_bcq(q, repair):
            return repair
    return None
