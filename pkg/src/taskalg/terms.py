"""Term types for the task algebra and model resolution.

A model is a list of ``let`` definitions followed by one ``main`` activity.
Everything here is an immutable value; resolution produces a lookup table
instead of rewriting the tree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Union


# -- expressions (guards and postconditions) ---------------------------------


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class StrLit:
    value: str


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Call:
    """An uninterpreted external call such as ``intropwd()``."""

    name: str
    args: tuple["Expr", ...] = ()


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"


REL_OPS = ("==", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Rel:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[IntLit, StrLit, BoolLit, Var, Call, Not, And, Or, Rel]


@dataclass(frozen=True)
class Guard:
    expr: Expr


@dataclass(frozen=True)
class Assignment:
    target: str
    value: Expr


# -- activities ---------------------------------------------------------------


@dataclass(frozen=True)
class Empty:
    pass


@dataclass(frozen=True)
class Succeed:
    pass


@dataclass(frozen=True)
class Fail:
    pass


@dataclass(frozen=True)
class TaskRef:
    """Reference to a task by name.

    ``overrides`` is ``None`` for a bare reference and a (possibly empty)
    tuple when the usage site carries a property list.
    """

    name: str
    overrides: Optional[tuple[Assignment, ...]] = None


@dataclass(frozen=True)
class Encapsulated:
    inner: "Activity"


@dataclass(frozen=True)
class Seq:
    first: "Activity"
    rest: "Activity"


@dataclass(frozen=True)
class Sel:
    left_guard: Optional[Guard]
    left: "Activity"
    right_guard: Optional[Guard]
    right: "Activity"


@dataclass(frozen=True)
class Par:
    left: "Activity"
    right: "Activity"


@dataclass(frozen=True)
class Until:
    guard: Optional[Guard]
    body: "Activity"


@dataclass(frozen=True)
class While:
    guard: Optional[Guard]
    body: "Activity"


Activity = Union[Empty, Succeed, Fail, TaskRef, Encapsulated, Seq, Sel, Par, Until, While]


@dataclass(frozen=True)
class CompoundBody:
    activity: Activity


@dataclass(frozen=True)
class SimpleBody:
    assignments: tuple[Assignment, ...] = ()


@dataclass(frozen=True)
class Definition:
    name: str
    body: Union[CompoundBody, SimpleBody]


@dataclass(frozen=True)
class Model:
    definitions: tuple[Definition, ...]
    main: Activity


# -- errors -------------------------------------------------------------------


class ModelError(Exception):
    """Base class for resolution and validation failures."""


class DuplicateDefinition(ModelError):
    def __init__(self, name: str):
        super().__init__(f"task {name!r} is defined more than once")
        self.name = name


class CyclicDefinition(ModelError):
    def __init__(self, cycle: list[str]):
        super().__init__("cyclic compound definition: " + " -> ".join(cycle))
        self.cycle = cycle


class OverrideOnCompound(ModelError):
    def __init__(self, name: str):
        super().__init__(f"compound task {name!r} cannot take a property list")
        self.name = name


class DuplicateAssignment(ModelError):
    def __init__(self, task: str, target: str):
        super().__init__(f"property {target!r} assigned twice in task {task!r}")
        self.task = task
        self.target = target


class EmptyLoopBody(ModelError):
    def __init__(self, kind: str):
        super().__init__(f"{kind} loop has an empty body")
        self.kind = kind


# -- resolution ---------------------------------------------------------------


@dataclass(frozen=True)
class Compound:
    definition: Definition


@dataclass(frozen=True)
class DeclaredSimple:
    definition: Definition


@dataclass(frozen=True)
class ImplicitSimple:
    pass


Resolution = Union[Compound, DeclaredSimple, ImplicitSimple]


@dataclass(frozen=True)
class ResolvedModel:
    model: Model
    resolutions: tuple[tuple[str, Resolution], ...]

    def lookup(self, name: str) -> Resolution:
        for key, res in self.resolutions:
            if key == name:
                return res
        return ImplicitSimple()

    def table(self) -> dict[str, Resolution]:
        return dict(self.resolutions)


def children(activity: Activity) -> tuple[Activity, ...]:
    if isinstance(activity, (Seq,)):
        return (activity.first, activity.rest)
    if isinstance(activity, (Sel,)):
        return (activity.left, activity.right)
    if isinstance(activity, Par):
        return (activity.left, activity.right)
    if isinstance(activity, (Until, While)):
        return (activity.body,)
    if isinstance(activity, Encapsulated):
        return (activity.inner,)
    return ()


def walk(activity: Activity) -> Iterator[Activity]:
    """Pre-order traversal of an activity, iterative to survive deep trees."""
    stack = [activity]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def guards(activity: Activity) -> Iterator[Guard]:
    for node in walk(activity):
        if isinstance(node, Sel):
            if node.left_guard is not None:
                yield node.left_guard
            if node.right_guard is not None:
                yield node.right_guard
        elif isinstance(node, (Until, While)) and node.guard is not None:
            yield node.guard


def free_task_names(activity: Activity) -> set[str]:
    return {node.name for node in walk(activity) if isinstance(node, TaskRef)}


def _check_assignments(task: str, assigns: tuple[Assignment, ...]) -> None:
    from taskalg.state import check_expr

    seen = set()
    for assign in assigns:
        if assign.target in seen:
            raise DuplicateAssignment(task, assign.target)
        seen.add(assign.target)
        check_expr(assign.value)


def _validate_activity(activity: Activity, table: dict[str, Resolution]) -> None:
    from taskalg.state import check_guard

    for node in walk(activity):
        if isinstance(node, (Until, While)) and isinstance(node.body, Empty):
            raise EmptyLoopBody("until" if isinstance(node, Until) else "while")
        if isinstance(node, TaskRef) and node.overrides is not None:
            if isinstance(table.get(node.name), Compound):
                raise OverrideOnCompound(node.name)
            _check_assignments(node.name, node.overrides)
    for guard in guards(activity):
        check_guard(guard)


def _find_cycle(graph: dict[str, list[str]]) -> Optional[list[str]]:
    white, grey, black = 0, 1, 2
    colour = {name: white for name in graph}
    for start in graph:
        if colour[start] != white:
            continue
        path = [start]
        colour[start] = grey
        iters = [iter(graph[start])]
        while iters:
            advanced = False
            for nxt in iters[-1]:
                if colour[nxt] == grey:
                    return path[path.index(nxt):] + [nxt]
                if colour[nxt] == white:
                    colour[nxt] = grey
                    path.append(nxt)
                    iters.append(iter(graph[nxt]))
                    advanced = True
                    break
            if not advanced:
                colour[path.pop()] = black
                iters.pop()
    return None


def resolve(model: Union[Model, ResolvedModel]) -> ResolvedModel:
    """Link task references to definitions and validate the model.

    Definitions may be referenced before they appear in the file.
    """
    if isinstance(model, ResolvedModel):
        model = model.model

    table: dict[str, Resolution] = {}
    for definition in model.definitions:
        if definition.name in table:
            raise DuplicateDefinition(definition.name)
        if isinstance(definition.body, CompoundBody):
            table[definition.name] = Compound(definition)
        else:
            table[definition.name] = DeclaredSimple(definition)

    graph: dict[str, list[str]] = {}
    for definition in model.definitions:
        if isinstance(definition.body, CompoundBody):
            refs = free_task_names(definition.body.activity)
            graph[definition.name] = sorted(
                r for r in refs if isinstance(table.get(r), Compound)
            )
    cycle = _find_cycle(graph)
    if cycle is not None:
        raise CyclicDefinition(cycle)

    for definition in model.definitions:
        if isinstance(definition.body, CompoundBody):
            _validate_activity(definition.body.activity, table)
        else:
            _check_assignments(definition.name, definition.body.assignments)
    _validate_activity(model.main, table)

    names = set(free_task_names(model.main))
    for definition in model.definitions:
        if isinstance(definition.body, CompoundBody):
            names |= free_task_names(definition.body.activity)
    resolutions = tuple(
        (name, table.get(name, ImplicitSimple())) for name in sorted(names | set(table))
    )
    return ResolvedModel(model, resolutions)
