from contextlib import contextmanager
from contextvars import ContextVar, Token

from rich.console import Console

console = Console()
error_console = Console(stderr=True)

warnings_ctx: "ContextVar[list[tuple[str, str]] | None]" = ContextVar("warnings", default=None)
run_ctx: "ContextVar[str | None]" = ContextVar("run", default=None)
debug_ctx: "ContextVar[bool]" = ContextVar("debug", default=False)


def make_warnings_ctx() -> "Token":
    return warnings_ctx.set([])


def reset_warnings_ctx(token: "Token"):
    return warnings_ctx.reset(token)


def set_debug(enabled: bool) -> "Token":
    return debug_ctx.set(enabled)


def reset_debug(token: "Token"):
    return debug_ctx.reset(token)


@contextmanager
def run_context(label: str):
    t = run_ctx.set(label)
    try:
        yield
    finally:
        run_ctx.reset(t)


def log_warning(message: str):
    label = run_ctx.get() or "-"
    if (warnings := warnings_ctx.get()) is not None:
        if next(filter(lambda w: w[0] == label and w[1] == message, warnings), None) is None:
            warnings.append((label, message))
    elif debug_ctx.get():
        console.print(f"[yellow] {label}: {message}")


def log_debug(message: str):
    if debug_ctx.get():
        console.print(f"[yellow] {message}")


def collected_warnings() -> list[tuple[str, str]]:
    return list(warnings_ctx.get() or [])


def print_warnings():
    if (warnings := warnings_ctx.get()) is not None:
        for label, message in warnings:
            console.print(f":warning-emoji: [yellow] {label}: {message} [/]")
