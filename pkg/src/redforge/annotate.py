"""Annotated prompt-text parsing for paralinguistic behavior control.

Thirteen behaviors in two modes. Acoustic-event behaviors are inserted tokens
written in brackets: ``[hic]`` ``[rep]`` ``[elong]`` ``[sss]`` ``[tsk]``
``[breath]`` ``[laugh]``. Overlapped behaviors are injection labels attached
to the text unit they follow: ``^`` (speak with a laugh), ``@`` (emphasis),
and ``{P}`` ``{C}`` ``{R}`` ``{S}`` (filled pause, confirmation, realization,
surprise). Text units are single characters for CJK and whitespace-delimited
words otherwise; each unit carries at most one label.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

EMOTIONS = ("neutral", "happy", "sad", "angry")

TOKEN_SURFACE = {
    "char_repetition": "hic",
    "word_repetition": "rep",
    "elongation": "elong",
    "hissing": "sss",
    "dental_click": "tsk",
    "breath": "breath",
    "laugh": "laugh",
}
_TOKEN_BY_SURFACE = {v: k for k, v in TOKEN_SURFACE.items()}

MARK_SURFACE = {
    "speak_with_laugh": "^",
    "emphasis": "@",
    "filled_pause": "{P}",
    "confirmation": "{C}",
    "realization": "{R}",
    "surprise": "{S}",
}
_BRACE_MARKS = {"P": "filled_pause", "C": "confirmation", "R": "realization", "S": "surprise"}

BEHAVIOR_MODES = {
    **{kind: "token_insertion" for kind in TOKEN_SURFACE},
    **{kind: "embedding_injection" for kind in MARK_SURFACE},
}


@dataclass(frozen=True)
class BehaviorTag:
    kind: str
    mode: str

    def __post_init__(self):
        if self.kind not in BEHAVIOR_MODES:
            raise ValueError(f"unknown behavior {self.kind!r}")
        if self.mode != BEHAVIOR_MODES[self.kind]:
            raise ValueError(f"behavior {self.kind} has mode {BEHAVIOR_MODES[self.kind]}, not {self.mode}")


def behavior_tag(kind: str) -> BehaviorTag:
    return BehaviorTag(kind=kind, mode=BEHAVIOR_MODES[kind])


@dataclass(frozen=True)
class TextUnit:
    text: str
    injection: str | None = None

    def __post_init__(self):
        if self.injection is not None and BEHAVIOR_MODES.get(self.injection) != "embedding_injection":
            raise ValueError(f"{self.injection!r} is not an embedding-injection behavior")


@dataclass(frozen=True)
class TokenUnit:
    kind: str

    def __post_init__(self):
        if BEHAVIOR_MODES.get(self.kind) != "token_insertion":
            raise ValueError(f"{self.kind!r} is not a token-insertion behavior")


@dataclass(frozen=True)
class PromptPlan:
    units: tuple
    emotion: str = "neutral"

    def __post_init__(self):
        if self.emotion not in EMOTIONS:
            raise ValueError(f"emotion must be one of {EMOTIONS}, got {self.emotion!r}")
        object.__setattr__(self, "units", tuple(self.units))

    def to_json_dict(self) -> dict:
        units = []
        for unit in self.units:
            if isinstance(unit, TokenUnit):
                units.append({"type": "token", "kind": unit.kind})
            else:
                entry = {"type": "text", "text": unit.text}
                if unit.injection is not None:
                    entry["injection"] = unit.injection
                units.append(entry)
        return {"emotion": self.emotion, "units": units}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "PromptPlan":
        units = []
        for entry in obj["units"]:
            if entry["type"] == "token":
                units.append(TokenUnit(kind=entry["kind"]))
            else:
                units.append(TextUnit(text=entry["text"], injection=entry.get("injection")))
        return cls(units=tuple(units), emotion=obj.get("emotion", "neutral"))


class AnnotationError(ValueError):
    """Malformed annotated text."""


_CJK_RANGES = (
    (0x3040, 0x30FF),  # kana
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0xF900, 0xFAFF),
    (0x3000, 0x303F),  # CJK punctuation
    (0xFF00, 0xFFEF),  # fullwidth forms
)


def _is_cjk(ch: str) -> bool:
    code = ord(ch)
    return any(lo <= code <= hi for lo, hi in _CJK_RANGES)


_RESERVED = set("[]^@{}")


def parse_annotated(text: str, emotion: str = "neutral") -> PromptPlan:
    """Parse annotated text into a PromptPlan.

    Raises :class:`AnnotationError` for unknown bracket tokens, dangling or
    duplicate marks, and unbalanced brackets.
    """
    units: list = []
    attachable = False  # may the next mark attach to units[-1]?

    def emit_text(s: str):
        nonlocal attachable
        units.append(TextUnit(text=s))
        attachable = True

    def attach_mark(kind: str, pos: int):
        nonlocal attachable
        if not attachable or not units or not isinstance(units[-1], TextUnit):
            raise AnnotationError(f"dangling mark at position {pos}")
        if units[-1].injection is not None:
            raise AnnotationError(f"unit {units[-1].text!r} already labeled (position {pos})")
        units[-1] = replace(units[-1], injection=kind)
        attachable = False

    i, n = 0, len(text)
    word_start = None

    def flush_word(upto: int):
        nonlocal word_start
        if word_start is not None:
            emit_text(text[word_start:upto])
            word_start = None

    while i < n:
        ch = text[i]
        if ch.isspace():
            flush_word(i)
            attachable = False
            i += 1
        elif ch == "[":
            flush_word(i)
            close = text.find("]", i + 1)
            if close < 0:
                raise AnnotationError(f"unterminated bracket at position {i}")
            name = text[i + 1 : close]
            if "[" in name:
                raise AnnotationError(f"nested bracket at position {i}")
            if name not in _TOKEN_BY_SURFACE:
                raise AnnotationError(f"unknown token [{name}] at position {i}")
            units.append(TokenUnit(kind=_TOKEN_BY_SURFACE[name]))
            attachable = False
            i = close + 1
        elif ch == "]":
            raise AnnotationError(f"stray ']' at position {i}")
        elif ch == "^":
            flush_word(i)
            attach_mark("speak_with_laugh", i)
            i += 1
        elif ch == "@":
            flush_word(i)
            attach_mark("emphasis", i)
            i += 1
        elif ch == "{":
            flush_word(i)
            close = text.find("}", i + 1)
            if close < 0:
                raise AnnotationError(f"unterminated brace mark at position {i}")
            code = text[i + 1 : close]
            if code not in _BRACE_MARKS:
                raise AnnotationError(f"unknown injection code {{{code}}} at position {i}")
            attach_mark(_BRACE_MARKS[code], i)
            i = close + 1
        elif ch == "}":
            raise AnnotationError(f"stray '}}' at position {i}")
        elif _is_cjk(ch):
            flush_word(i)
            emit_text(ch)
            i += 1
        else:
            if word_start is None:
                word_start = i
            i += 1
    flush_word(n)
    return PromptPlan(units=tuple(units), emotion=emotion)


def _unit_surface(unit) -> str:
    if isinstance(unit, TokenUnit):
        return f"[{TOKEN_SURFACE[unit.kind]}]"
    surface = unit.text
    if unit.injection is not None:
        surface += MARK_SURFACE[unit.injection]
    return surface


def _is_cjk_text(unit) -> bool:
    return isinstance(unit, TextUnit) and all(_is_cjk(c) for c in unit.text)


def serialize(plan: PromptPlan) -> str:
    """Canonical annotated-string form: adjacent CJK units are concatenated,
    everything else is joined with single spaces. ``parse(serialize(plan))``
    reproduces the plan."""
    parts = []
    prev = None
    for unit in plan.units:
        if prev is not None and not (_is_cjk_text(prev) and _is_cjk_text(unit)):
            parts.append(" ")
        parts.append(_unit_surface(unit))
        prev = unit
    return "".join(parts)
