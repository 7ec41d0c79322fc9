import collections
import logging
import numpy as np

from wtpc.data.records import CleanDataset, CleaningReport, NORMAL
from wtpc.errors import DataError, EmptyAfterCleaningError


DEFAULT_IQR_K = 3.0
MIN_GROUP_SIZE = 4


def wind_key(w):
    return int(round(w * 10))


def count_missing(timestamps, delta=10):
    """
    Number of slots of the regular grid spanned by the first and last
    timestamp (anchored at the first one) that have no record.
    """

    if not timestamps:
        return 0
    t0 = min(timestamps)
    t1 = max(timestamps)
    slots = (t1 - t0) // delta + 1
    present = len(set(t for t in timestamps if (t - t0) % delta == 0))
    return slots - present


def outlier_bounds(power, iqr_k):
    q1, q3 = np.percentile(power, [25, 75])
    iqr = q3 - q1
    return q1 - iqr_k * iqr, q3 + iqr_k * iqr


def remove_outliers(records, iqr_k=DEFAULT_IQR_K, min_group=MIN_GROUP_SIZE):
    """
    Drops records whose power lies outside the whiskers of their wind
    group. Each group gets a single fence computed from all of its records,
    so a larger iqr_k never drops more. Returns the kept records and the
    number of records dropped.
    """

    groups = collections.defaultdict(list)
    for i, r in enumerate(records):
        groups[wind_key(r.wind)].append(i)

    discard = set()
    for key, indices in groups.items():
        if len(indices) < min_group:
            continue
        power = np.array([records[i].power for i in indices])
        lo, hi = outlier_bounds(power, iqr_k)
        outside = [i for i, p in zip(indices, power) if p < lo or p > hi]
        if outside:
            logging.debug(f"wind {key / 10:.1f}: {len(outside)} outliers outside [{lo:.1f}, {hi:.1f}]")
        discard.update(outside)

    kept = [r for i, r in enumerate(records) if i not in discard]
    return kept, len(discard)


def clean(records, iqr_k=DEFAULT_IQR_K, normal_states=(NORMAL,), delta=10, min_group=MIN_GROUP_SIZE):
    records = list(records)
    if not records:
        raise DataError("no records to clean")
    if not iqr_k > 0:
        raise DataError(f"iqr_k must be positive, is {iqr_k}")

    normal_states = frozenset(normal_states)

    na = count_missing([r.timestamp for r in records], delta=delta)
    raw = len(records) + na

    complete = [r for r in records if r.complete]
    incomplete = len(records) - len(complete)

    normal = [r for r in complete if r.state in normal_states]
    not_normal = len(complete) - len(normal)

    kept, outliers = remove_outliers(normal, iqr_k=iqr_k, min_group=min_group)

    report = CleaningReport(
        raw=raw,
        na=na,
        incomplete=incomplete,
        not_normal=not_normal,
        outliers=outliers,
        retained=len(kept))

    logging.info(
        f"cleaning: raw {raw}, NA {na}, IN {incomplete}, NNO {not_normal}, "
        f"outliers {outliers}, retained {len(kept)}")

    if not kept:
        raise EmptyAfterCleaningError(report)

    return CleanDataset(kept, report=report)
