"""Action directives emitted by the actor and their parser.

The actor ends each reply with one directive line:

    ACTION: <name>(<key>=<value>, ...)

Parsing is deliberately forgiving about surroundings (code fences, inline
backticks, trailing prose above the line) but strict about the directive
itself: unknown names and malformed argument lists raise, and the loop
turns that into a corrective observation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum


class ActionName(Enum):
    SEARCH = "search"
    OPEN_URL = "open_url"
    PAGE_UP = "page_up"
    PAGE_DOWN = "page_down"
    READ_ATTACHMENT = "read_attachment"
    FINAL_ANSWER = "final_answer"


# key assumed when the model passes a single unnamed argument
_PRIMARY_KEY = {
    ActionName.SEARCH: "query",
    ActionName.OPEN_URL: "url",
    ActionName.READ_ATTACHMENT: "name",
    ActionName.FINAL_ANSWER: "answer",
}


class UnparsableActionError(ValueError):
    pass


@dataclass(frozen=True)
class Action:
    name: ActionName
    arguments: dict[str, str] = field(default_factory=dict)

    def render(self) -> str:
        inner = ", ".join(f"{k}={v}" for k, v in self.arguments.items())
        return f"{self.name.value}({inner})"

    @property
    def is_terminal(self) -> bool:
        return self.name is ActionName.FINAL_ANSWER


_DIRECTIVE = re.compile(r"ACTION:\s*([A-Za-z_]+)\s*\((.*)\)\s*$")


def _split_arguments(body: str) -> list[str]:
    """Split on commas that sit outside double quotes."""
    parts = []
    current = []
    in_quotes = False
    for ch in body:
        if ch == '"':
            in_quotes = not in_quotes
            current.append(ch)
        elif ch == "," and not in_quotes:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    parts.append("".join(current))
    return [p.strip() for p in parts if p.strip()]


def _strip_quotes(value: str) -> str:
    if len(value) >= 2 and value[0] == '"' and value[-1] == '"':
        return value[1:-1]
    return value


def parse_action(text: str) -> Action:
    """Extract the last ACTION directive from an actor reply."""
    match = None
    for raw_line in text.splitlines():
        line = raw_line.strip().strip("`").strip()
        m = _DIRECTIVE.search(line)
        if m is not None:
            match = m
    if match is None:
        raise UnparsableActionError("no ACTION directive found")

    raw_name = match.group(1).lower()
    try:
        name = ActionName(raw_name)
    except ValueError:
        raise UnparsableActionError(f"unknown action {raw_name!r}") from None

    body = match.group(2).strip()
    arguments: dict[str, str] = {}
    if body:
        pieces = _split_arguments(body)
        # a piece counts as key=value only when '=' appears before any quote
        for piece in pieces:
            eq = piece.find("=")
            quote = piece.find('"')
            if eq != -1 and (quote == -1 or eq < quote):
                key = piece[:eq].strip().lower()
                value = _strip_quotes(piece[eq + 1 :].strip())
                if not key:
                    raise UnparsableActionError(f"empty argument name in {piece!r}")
                arguments[key] = value
            else:
                primary = _PRIMARY_KEY.get(name)
                if primary is None or primary in arguments or len(pieces) > 1:
                    raise UnparsableActionError(f"cannot place bare argument {piece!r}")
                arguments[primary] = _strip_quotes(piece)

    if name is ActionName.FINAL_ANSWER and set(arguments) != {"answer"}:
        raise UnparsableActionError("final_answer takes exactly one argument: answer")
    return Action(name, arguments)
