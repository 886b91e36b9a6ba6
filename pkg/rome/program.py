"""
Checked programs: the environment a source file is loaded into.

A program grows declaration by declaration. A declaration that fails is
reported and left out; later declarations that use it see an unbound name.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

from django.conf import settings

from .evaluate import Evaluator, Tracer
from .exceptions import InvariantBreach, ParseError, RomeError
from .kinding import check_kind, infer_kind
from .parser import (
    CoreDecl, Parser, Resolver, TermDef, TermSig, TypeDef, TypeSig,
    parse_term, parse_type, split_declarations, tokenize,
)
from .pretty import show_kind, show_type
from .syntax import Kind, Ref, Term, Type
from .typecheck import Checked, TypeEnv, check_definition, infer_term

logger = logging.getLogger('rome')

PRELUDE_DIR = Path(__file__).resolve().parent / 'prelude'
PRELUDE_FILES = ('base.rome', 'generic.rome', 'expressions.rome')


@dataclass
class Declared:
    """Outcome of one declaration: what it defined, or why it failed."""
    name: str
    sort: str
    type: Type | None = None
    kind: Kind | None = None
    error: RomeError | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class Program:
    env: TypeEnv = field(default_factory=TypeEnv)
    definitions: dict[str, Checked] = field(default_factory=dict)
    entail_depth: int | None = None

    def copy(self) -> 'Program':
        return Program(TypeEnv(dict(self.env.synonyms), dict(self.env.types)),
                       dict(self.definitions), self.entail_depth)

    @property
    def type_names(self) -> list[str]:
        return list(self.env.synonyms)

    @property
    def term_names(self) -> list[str]:
        return list(self.definitions)

    def _resolver(self) -> Resolver:
        return Resolver(self.type_names, self.term_names)

    # loading

    def load(self, source: str, keep_going: bool = True, quiet: bool = False) -> list[Declared]:
        """
        Check every declaration of ``source`` and add the good ones.

        Args:
            source: program text
            keep_going: report a failed declaration and continue, instead of raising
            quiet: log per-declaration results at DEBUG instead of INFO

        Returns:
            One entry per declaration, in source order
        """
        log = logger.debug if quiet else logger.info
        results: list[Declared] = []
        resolver = self._resolver()
        pending: dict[tuple[str, str], TypeSig | TermSig] = {}

        def fail(name: str, sort: str, exc: RomeError) -> None:
            if not keep_going:
                raise exc
            logger.warning(f"Declaration {name or '<unknown>'} failed: {exc.format()}")
            results.append(Declared(name, sort, error=exc))

        try:
            groups = split_declarations(tokenize(source))
        except ParseError as exc:
            fail('', 'term', exc)
            return results
        for group in groups:
            try:
                decl = Parser(group).declaration()
            except ParseError as exc:
                fail('', 'term', exc)
                continue
            sort = 'type' if isinstance(decl, (TypeSig, TypeDef)) else 'term'
            key = (sort, decl.name)
            if isinstance(decl, (TypeSig, TermSig)):
                if key in pending:
                    fail(decl.name, sort, ParseError(f"duplicate signature for '{decl.name}'").at(decl.pos))
                else:
                    pending[key] = decl
                continue
            sig = pending.pop(key, None)
            try:
                (core,) = resolver.resolve([sig, decl] if sig else [decl])
                results.append(self.declare(core))
            except InvariantBreach:
                logger.exception(f"Declaration {decl.name} broke an invariant")
                raise
            except RomeError as exc:
                known = self.env.synonyms if sort == 'type' else self.definitions
                if decl.name not in known:
                    (resolver.type_names if sort == 'type' else resolver.term_names).discard(decl.name)
                fail(decl.name, sort, exc)
                continue
            log(f"Checked {results[-1].name} : {self.describe(results[-1])}")
        for (sort, name), sig in pending.items():
            fail(name, sort, ParseError(f"signature for '{name}' lacks a definition").at(sig.pos))
        return results

    def declare(self, decl: CoreDecl) -> Declared:
        """Kind or type check one resolved declaration and record it."""
        if decl.sort == 'type':
            if decl.signature is not None:
                body = check_kind((), decl.body, decl.signature, self.env.synonyms)
                kind = decl.signature
            else:
                body, kind = infer_kind((), decl.body, self.env.synonyms, default_star=True)
            self.env.synonyms[decl.name] = (body, kind)
            return Declared(decl.name, 'type', kind=kind)
        checked = check_definition(self.env, decl.name, decl.signature, decl.body, self.entail_depth)
        self.env.types[decl.name] = checked.type
        self.definitions[decl.name] = checked
        return Declared(decl.name, 'term', type=checked.type)

    def load_file(self, path: str | Path, keep_going: bool = True) -> list[Declared]:
        """Raises OSError when the file cannot be read."""
        source = Path(path).read_text(encoding='utf-8')
        logger.info(f"Loading {path}")
        return self.load(source, keep_going)

    @staticmethod
    def describe(d: Declared) -> str:
        return show_kind(d.kind) if d.sort == 'type' else show_type(d.type)

    # queries

    def resolve_term(self, source: str) -> Term:
        return self._resolver().resolve_term(parse_term(source), [], [])

    def infer(self, source: str) -> tuple[Term, Type]:
        """Elaborate a closed expression and return it with its normal type."""
        return infer_term(self.env, self.resolve_term(source), self.entail_depth)

    def kind(self, source: str) -> tuple[Type, Kind]:
        ty = self._resolver().resolve_type(parse_type(source), [])
        return infer_kind((), ty, self.env.synonyms, default_star=True)

    # evaluation

    def evaluator(self) -> Evaluator:
        return Evaluator({name: c.term for name, c in self.definitions.items()})

    def run(self, entry: str, fuel: int | None = None, trace: Tracer | None = None) -> Term:
        """Evaluate the definition named ``entry``."""
        if entry not in self.definitions:
            raise ParseError(f"unbound identifier '{entry}'")
        return self.evaluator().run(Ref(entry), fuel, trace)

    def evaluate(self, source: str, fuel: int | None = None, trace: Tracer | None = None) -> tuple[Term, Type]:
        """Check and evaluate a closed expression."""
        term, ty = self.infer(source)
        return self.evaluator().run(term, fuel, trace), ty


@lru_cache(maxsize=4)
def _prelude(entail_depth: int | None) -> Program:
    program = Program(entail_depth=entail_depth)
    for name in PRELUDE_FILES:
        program.load((PRELUDE_DIR / name).read_text(encoding='utf-8'), keep_going=False, quiet=True)
    logger.info(f"Prelude loaded with {len(program.definitions)} definitions")
    return program


def load_prelude(entail_depth: int | None = None) -> Program:
    """A fresh copy of the checked prelude; the checked original is shared."""
    return _prelude(entail_depth).copy()


def new_program(prelude: bool | None = None, entail_depth: int | None = None) -> Program:
    prelude = settings.ROME_PRELUDE if prelude is None else prelude
    if prelude:
        program = load_prelude(entail_depth)
    else:
        program = Program(entail_depth=entail_depth)
    program.entail_depth = entail_depth
    return program
