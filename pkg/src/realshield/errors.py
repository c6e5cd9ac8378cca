"""Exception hierarchy shared by every stage of the toolkit."""


class ShieldError(Exception):
    """Base class for all realshield errors."""


# predicate engine
class UnknownPredicate(ShieldError, KeyError):
    pass


class EmptyLiteralSet(ShieldError, ValueError):
    pass


class NotUnsat(ShieldError, ValueError):
    pass


class GroupTooLarge(ShieldError):
    pass


class DnfBudgetExceeded(ShieldError):
    pass


class EliminationBudgetExceeded(ShieldError):
    pass


class Infeasible(ShieldError):
    pass


class Unbounded(ShieldError):
    pass


# automata
class NondeterministicInput(ShieldError):
    def __init__(self, state, cube_a, cube_b):
        super().__init__(f"overlapping guards in state {state!r}: {cube_a} / {cube_b}")
        self.state = state
        self.cubes = (cube_a, cube_b)


class IncompleteAutomaton(ShieldError):
    pass


class SignatureClash(ShieldError):
    pass


class MappingCollision(ShieldError):
    pass


class GuardSyntaxError(ShieldError, ValueError):
    pass


# frontend
class SchemaError(ShieldError, ValueError):
    def __init__(self, message, pointer=""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer or "/"


class UndefinedVariable(SchemaError):
    pass


class DuplicatePredicateId(SchemaError):
    pass


class NoClockDeclared(SchemaError):
    pass


class MixedKindPredicate(SchemaError):
    pass


# synthesis / runtime
class UnrealizableSpec(ShieldError):
    def __init__(self, message, counterexample=()):
        super().__init__(message)
        self.counterexample = list(counterexample)


class ImpossibleInputObserved(ShieldError):
    pass


class MissingVariable(ShieldError, KeyError):
    pass


class ShieldSpecMismatch(ShieldError):
    pass


class RealizabilityError(ShieldError):
    """A correction letter had no real-valued solution at run time."""
