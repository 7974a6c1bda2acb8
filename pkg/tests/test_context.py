import threading

from package.context import collected_warnings, log_warning, run_context
from package.iter import IterContainer, IterController, make_executor


def test_warnings_are_deduplicated(warnings):
    log_warning("slow convergence")
    log_warning("slow convergence")
    with run_context("run 3"):
        log_warning("slow convergence")
    assert collected_warnings() == [("-", "slow convergence"), ("run 3", "slow convergence")]


def test_without_a_warnings_context():
    log_warning("dropped")
    assert collected_warnings() == []


def test_executor_keeps_order():
    assert make_executor(1) is None
    with IterController(IterContainer(range(20), make_executor(4)).map(lambda i: i * i)) as squares:
        assert squares.list == [i * i for i in range(20)]


def test_workers_share_the_warnings_list(warnings):
    threads = set()

    def work(i: int) -> int:
        threads.add(threading.get_ident())
        with run_context(f"item {i}"):
            log_warning("checked")
        return i

    with IterController(IterContainer(range(8), make_executor(2)).map(work)) as items:
        assert items.length == 8
    assert threading.get_ident() not in threads
    assert sorted(collected_warnings()) == sorted((f"item {i}", "checked") for i in range(8))


def test_on_done_sees_every_result():
    done = []
    with IterController(IterContainer([1, 2, 3], make_executor(2)).map(lambda i: -i, on_done=done.append)) as items:
        assert items.list == [-1, -2, -3]
    assert sorted(done) == [-3, -2, -1]
