from __future__ import annotations

import contextvars
from concurrent.futures import ThreadPoolExecutor
from functools import cached_property
from typing import Callable, Iterable, Iterator, Sequence


def make_executor(workers: int) -> ThreadPoolExecutor | None:
    """Thread pool whose workers start with a copy of the caller's context (warnings list, debug flag)"""
    if workers <= 1:
        return None
    args = (contextvars.copy_context(),)

    def set_context(context: contextvars.Context):
        for var, value in context.items():
            var.set(value)

    return ThreadPoolExecutor(max_workers=workers, initializer=set_context, initargs=args)


class IterContainer[T]:
    """Batch of work items; map runs through the executor when there is one, results stay in input order"""

    def __init__(self, items: Iterable[T] | None = None, executor: ThreadPoolExecutor | None = None):
        self.__items: Iterable[T] = items if items is not None else ()
        self.executor = executor

    def __iter__(self) -> Iterator[T]:
        # One-shot iterables (executor results) are consumed once and kept
        if not isinstance(self.__items, Sequence):
            self.__items = tuple(self.__items)
        return iter(self.__items)

    @cached_property
    def list(self) -> list[T]:
        return list(self)

    @property
    def length(self) -> int:
        return len(self.list)

    def __len__(self):
        return self.length

    def map[R](self, func: Callable[[T], R], on_done: Callable[[R], None] | None = None) -> IterContainer[R]:
        def call(item: T) -> R:
            result = func(item)
            if on_done is not None:
                on_done(result)
            return result

        results = self.executor.map(call, self) if self.executor is not None else map(call, self)
        return IterContainer(results, self.executor)


class IterController[T]:
    """Context manager that shuts the executor down once the batch is collected"""

    def __init__(self, iterable: IterContainer[T]):
        self.i = iterable

    @property
    def list(self) -> list[T]:
        return self.i.list

    @property
    def length(self) -> int:
        return self.i.length

    def __len__(self):
        return self.length

    def __enter__(self):
        return self

    def __exit__(self, type, value, traceback):
        if self.i.executor is not None:
            self.i.executor.shutdown()
