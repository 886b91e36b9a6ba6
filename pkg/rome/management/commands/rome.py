"""
The ``rome`` command: check files, run a definition, or start a REPL.

Exit codes: 0 success, 1 language errors, 2 unreadable input, 3 out of fuel.
"""
import logging
import re
import sys
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from rome.exceptions import InvariantBreach, OutOfFuel, RomeError
from rome.program import Declared, Program, new_program
from rome.pretty import show_evidence, show_kind, show_pred, show_type, show_value

logger = logging.getLogger('rome')

EXIT_LANGUAGE = 1
EXIT_IO = 2
EXIT_FUEL = 3

REPL_HELP = """\
  <expr>            evaluate an expression and print its value and type
  <name> = <expr>   add a definition (a signature line may come first)
  type <N> = <ty>   add a type synonym (a kind line may come first)
  :t <expr>         print the normal type of an expression
  :k <type>         print the kind of a type
  :load <file>      check a file and add its definitions
  :help             show this text
  :quit             leave"""

SIGNATURE = re.compile(r"^(type\s+)?[A-Za-z_]\w*\s*:(?!=)")


class Command(BaseCommand):
    help = 'Type check, evaluate and explore row-typed programs'
    requires_system_checks = []
    stealth_options = ('stdin',)

    def add_arguments(self, parser):
        actions = parser.add_subparsers(dest='action', required=True)

        check = actions.add_parser('check', help='Parse, kind and type check files or directories')
        check.add_argument('paths', nargs='+')
        self._common_arguments(check)

        run = actions.add_parser('run', help='Check a file and evaluate one of its definitions')
        run.add_argument('path')
        run.add_argument('entry')
        self._common_arguments(run)
        self._evaluation_arguments(run)

        repl = actions.add_parser('repl', help='Interactive session')
        self._common_arguments(repl)
        self._evaluation_arguments(repl)

    @staticmethod
    def _common_arguments(parser):
        parser.add_argument('--no-prelude', action='store_true', help='Start from an empty environment')
        parser.add_argument('--entail-depth', type=int, default=None,
                            help='Rounds of hypothesis saturation (default ROME_ENTAIL_DEPTH)')
        parser.add_argument('--dump-types', action='store_true', help='Print every checked declaration')
        parser.add_argument('--explain-evidence', action='store_true',
                            help='Print every solved predicate with its evidence')

    @staticmethod
    def _evaluation_arguments(parser):
        parser.add_argument('--fuel', type=int, default=None, help='Step budget (default ROME_FUEL)')
        parser.add_argument('--trace', action='store_true', help='Print each reduction step')

    def handle(self, *args, **options):
        self.options = options
        self.program = new_program(prelude=False if options['no_prelude'] else None,
                                   entail_depth=options['entail_depth'])
        action = options['action']
        if action == 'check':
            self.check(options['paths'])
        elif action == 'run':
            self.run(options['path'], options['entry'])
        else:
            self.repl(options.get('stdin') or sys.stdin)

    # check

    def check(self, paths: list[str]) -> None:
        files: list[Path] = []
        unreadable = 0
        for raw in paths:
            path = Path(raw)
            if path.is_dir():
                files.extend(sorted(path.glob('*.rome')))
            else:
                files.append(path)
        failed = 0
        for path in files:
            program = self.program.copy()
            try:
                results = program.load_file(path)
            except OSError as exc:
                self.stderr.write(f"{path}: error: cannot read file: {exc.strerror or exc}")
                unreadable += 1
                continue
            bad = self.report(results, str(path), program)
            failed += bad
            if not bad:
                self.stdout.write(self.style.SUCCESS(f"{path}: {len(results)} declarations OK"))
        if unreadable:
            raise CommandError(f"{unreadable} file(s) could not be read", returncode=EXIT_IO)
        if failed:
            raise CommandError(f"{failed} declaration(s) failed", returncode=EXIT_LANGUAGE)

    def report(self, results: list[Declared], path: str, program: Program | None = None) -> int:
        """Print diagnostics and the requested dumps; return the number of failures."""
        program = program or self.program
        failed = 0
        for d in results:
            if not d.ok:
                self.stderr.write(d.error.format(path))
                failed += 1
                continue
            if self.options['dump_types']:
                sep = ' :: ' if d.sort == 'type' else ' : '
                self.stdout.write(f"{d.name}{sep}{Program.describe(d)}")
            if self.options['explain_evidence'] and d.sort == 'term' and d.name in program.definitions:
                for ex in program.definitions[d.name].explanations:
                    self.stdout.write(f"  {d.name}: {show_pred(ex.pred, ex.names)} by {show_evidence(ex.evidence)}")
        return failed

    # run

    def run(self, path: str, entry: str) -> None:
        try:
            results = self.program.load_file(path)
        except OSError as exc:
            raise CommandError(f"{path}: error: cannot read file: {exc.strerror or exc}", returncode=EXIT_IO)
        if self.report(results, path):
            raise CommandError(f"{path} has errors; not running", returncode=EXIT_LANGUAGE)
        try:
            value = self.program.run(entry, self.options['fuel'], self._tracer())
        except OutOfFuel as exc:
            raise CommandError(exc.format(path), returncode=EXIT_FUEL)
        except InvariantBreach:
            logger.exception(f"Evaluation of {entry} broke an invariant")
            raise
        except RomeError as exc:
            raise CommandError(exc.format(path), returncode=EXIT_LANGUAGE)
        self.stdout.write(show_value(value))

    def _tracer(self):
        if not self.options['trace']:
            return None
        limit = settings.ROME_TRACE_LIMIT

        def trace(n: int, rule: str, redex) -> None:
            if n <= limit:
                self.stdout.write(f"{n:>6}  {rule:<6} {show_value(redex)}")
            elif n == limit + 1:
                self.stdout.write(f"   ... further steps elided (ROME_TRACE_LIMIT={limit})")

        return trace

    # repl

    def repl(self, stdin) -> None:
        self.stdout.write("Type :help for commands, :quit to leave.")
        pending = ''
        while True:
            self.stdout.write('... ' if pending else 'rome> ', ending='')
            self.stdout.flush()
            line = stdin.readline()
            if not line:
                break
            line = line.strip()
            if not line:
                continue
            if line in (':q', ':quit'):
                break
            if pending or SIGNATURE.match(line):
                pending += line + '\n'
                if SIGNATURE.match(line):
                    continue
                source, pending = pending, ''
                self.declare(source)
                continue
            try:
                self.interpret(line)
            except InvariantBreach:
                logger.exception(f"Input broke an invariant: {line}")
                self.stderr.write('internal error; see the log for details')
            except RomeError as exc:
                self.stderr.write(exc.format('<repl>'))

    def interpret(self, line: str) -> None:
        if line == ':help':
            self.stdout.write(REPL_HELP)
        elif line.startswith(':t '):
            _, ty = self.program.infer(line[3:])
            self.stdout.write(show_type(ty))
        elif line.startswith(':k '):
            _, kind = self.program.kind(line[3:])
            self.stdout.write(show_kind(kind))
        elif line.startswith(':load '):
            path = line[6:].strip()
            try:
                results = self.program.load_file(path)
            except OSError as exc:
                self.stderr.write(f"{path}: error: cannot read file: {exc.strerror or exc}")
                return
            failed = self.report(results, path)
            self.stdout.write(f"Loaded {len(results) - failed} of {len(results)} declarations")
        elif line.startswith(':'):
            self.stderr.write(f"unknown command {line.split()[0]}; try :help")
        elif line.startswith('type ') or re.match(r'^[A-Za-z_]\w*\s*=', line):
            self.declare(line)
        else:
            value, ty = self.program.evaluate(line, self.options['fuel'], self._tracer())
            self.stdout.write(f"{show_value(value)} : {show_type(ty)}")

    def declare(self, source: str) -> None:
        results = self.program.load(source)
        self.report(results, '<repl>')
        for d in results:
            if d.ok:
                self.stdout.write(f"{d.name} : {Program.describe(d)}")
