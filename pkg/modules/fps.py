# modules/fps.py
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from modules.errors import SubInstanceCapError, SubInstanceLookupError
from modules.taskmodel import ReleaseMode, TaskSet, expand_instances

DEFAULT_SUB_INSTANCE_CAP = 1000

Key = Tuple[int, int, int]


@dataclass(frozen=True)
class SubInstance:
    task: int
    instance: int
    k: int
    seg_start: int
    seg_end: int
    release: int
    deadline: int
    order: int

    @property
    def key(self) -> Key:
        return (self.task, self.instance, self.k)

    @property
    def parent(self) -> Tuple[int, int]:
        return (self.task, self.instance)


@dataclass(frozen=True)
class FPSchedule:
    sub_instances: Tuple[SubInstance, ...]
    by_instance: Dict[Tuple[int, int], Tuple[SubInstance, ...]] = field(compare=False)
    _index: Dict[Key, SubInstance] = field(compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.sub_instances)

    def __iter__(self):
        return iter(self.sub_instances)

    def get(self, key: Key) -> SubInstance:
        try:
            return self._index[key]
        except KeyError:
            raise SubInstanceLookupError(f"unknown sub-instance {key}") from None

    def is_last(self, sub: SubInstance) -> bool:
        return self.by_instance[sub.parent][-1].k == sub.k


# -------------------------------------------------------------
# Construction
# -------------------------------------------------------------
def _split_points(ts: TaskSet, task: int, release: int, deadline: int) -> List[int]:
    """Releases of strictly higher-priority tasks inside (release, deadline)."""
    if ts.mode is ReleaseMode.ONE_SHOT:
        return []
    points = set()
    for hp in ts.tasks[: task - 1]:
        first = (release // hp.period + 1) * hp.period
        for t in range(first, deadline, hp.period):
            points.add(t)
    return sorted(points)


def count_sub_instances(ts: TaskSet) -> int:
    return sum(
        1 + len(_split_points(ts, inst.task, inst.release, inst.deadline))
        for inst in expand_instances(ts)
    )


def build_fps(ts: TaskSet, max_sub_instances: int = DEFAULT_SUB_INSTANCE_CAP) -> FPSchedule:
    """
    Split every instance window at the higher-priority releases it contains and
    order all pieces by (segment start, priority, instance).
    """
    instances = expand_instances(ts)
    if len(instances) > max_sub_instances:
        raise SubInstanceCapError(len(instances), max_sub_instances)

    raw = []
    for inst in instances:
        bounds = [inst.release] + _split_points(ts, inst.task, inst.release, inst.deadline) + [inst.deadline]
        for k, (a, b) in enumerate(zip(bounds, bounds[1:]), start=1):
            raw.append((a, inst.task, inst.instance, k, b, inst.release, inst.deadline))
        if len(raw) > max_sub_instances:
            raise SubInstanceCapError(count_sub_instances(ts), max_sub_instances)

    raw.sort(key=lambda r: (r[0], r[1], r[2]))

    subs = tuple(
        SubInstance(
            task=i, instance=j, k=k, seg_start=a, seg_end=b,
            release=R, deadline=D, order=n,
        )
        for n, (a, i, j, k, b, R, D) in enumerate(raw)
    )

    grouped: Dict[Tuple[int, int], List[SubInstance]] = {}
    for s in subs:
        grouped.setdefault(s.parent, []).append(s)
    by_instance = {key: tuple(sorted(v, key=lambda s: s.k)) for key, v in grouped.items()}

    return FPSchedule(subs, by_instance, {s.key: s for s in subs})


def predecessor(fps: FPSchedule, sub: SubInstance) -> Optional[SubInstance]:
    found = fps.get(sub.key)
    if found.order == 0:
        return None
    return fps.sub_instances[found.order - 1]


def describe_fps(fps: FPSchedule) -> List[str]:
    return [
        f"({s.task},{s.instance},{s.k}) seg=[{s.seg_start},{s.seg_end}) "
        f"R={s.release}, D={s.deadline}, order={s.order}"
        for s in fps
    ]
