"""Tests for the rome management command."""
import tempfile
from io import StringIO
from pathlib import Path
from unittest.mock import patch

from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from rome.program import PRELUDE_DIR

CORPUS_DIR = PRELUDE_DIR.parent / 'corpus'
GOLDEN = CORPUS_DIR / 'golden.rome'
THREE = "in (#'Succ := in (#'Succ := in (#'Succ := in (#'Zero := #'Unit))))"


class RomeCommandTests(SimpleTestCase):
    """Test checking, running and the REPL through call_command."""

    def setUp(self):
        self.stdout = StringIO()
        self.stderr = StringIO()
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.tmp = Path(tmp.name)

    def _call(self, *args, **kwargs):
        call_command('rome', *args, stdout=self.stdout, stderr=self.stderr, **kwargs)
        return self.stdout.getvalue()

    def _write(self, name, source):
        path = self.tmp / name
        path.write_text(source, encoding='utf-8')
        return str(path)

    def test_check_corpus(self):
        """The shipped corpus checks cleanly."""
        out = self._call('check', str(CORPUS_DIR))
        self.assertIn('records.rome', out)
        self.assertIn('declarations OK', out)
        self.assertEqual(self.stderr.getvalue(), '')

    def test_check_reports_errors(self):
        """A file with a type error exits with status 1 and a positioned message."""
        path = self._write('bad.rome', 'bad : Nat\nbad = True\n')
        with self.assertRaises(CommandError) as ctx:
            self._call('check', path)
        self.assertEqual(ctx.exception.returncode, 1)
        self.assertIn(f'{path}:2:', self.stderr.getvalue())
        self.assertIn('error:', self.stderr.getvalue())

    def test_check_missing_file(self):
        """An unreadable file exits with status 2."""
        with self.assertRaises(CommandError) as ctx:
            self._call('check', str(self.tmp / 'missing.rome'))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_check_without_prelude(self):
        """Prelude names are unknown with --no-prelude."""
        path = self._write('uses.rome', 'x = one\n')
        with self.assertRaises(CommandError):
            self._call('check', path, '--no-prelude')
        self.assertIn("unbound identifier 'one'", self.stderr.getvalue())

    @patch.object(settings, 'ROME_PRELUDE', False)
    def test_prelude_setting(self):
        """ROME_PRELUDE controls the default environment."""
        path = self._write('plain.rome', 'unit : #\'Unit\nunit = #\'Unit\n')
        out = self._call('check', path)
        self.assertIn('1 declarations OK', out)

    def test_dump_types(self):
        """Checked declarations are listed with their types and kinds."""
        path = self._write('dump.rome', "type T : *\ntype T = Pi {'a := Nat}\n\nt : T\nt = #'a := one\n")
        out = self._call('check', path, '--dump-types')
        self.assertIn('T :: *', out)
        self.assertIn('t : ', out)

    def test_explain_evidence(self):
        """Solved predicates are printed with their evidence."""
        path = self._write('explain.rome', "w : Nat\nw = sel ((#'x := one) ++ (#'y := two)) #'y\n")
        out = self._call('check', path, '--explain-evidence')
        self.assertIn('w: ', out)
        self.assertIn(' by ', out)

    def test_run(self):
        """run prints the value of the entry point."""
        out = self._call('run', str(GOLDEN), 'addOneTwo')
        self.assertEqual(out.strip(), THREE)

    def test_run_out_of_fuel(self):
        """A divergent entry exits with status 3."""
        with self.assertRaises(CommandError) as ctx:
            self._call('run', str(GOLDEN), 'loop', '--fuel', '100')
        self.assertEqual(ctx.exception.returncode, 3)

    def test_run_zero_fuel(self):
        """--fuel 0 is a budget of zero, not the default."""
        with self.assertRaises(CommandError) as ctx:
            self._call('run', str(GOLDEN), 'addOneTwo', '--fuel', '0')
        self.assertEqual(ctx.exception.returncode, 3)

    def test_run_unknown_entry(self):
        with self.assertRaises(CommandError) as ctx:
            self._call('run', str(GOLDEN), 'nowhere')
        self.assertEqual(ctx.exception.returncode, 1)

    def test_run_trace(self):
        """--trace prints numbered steps before the value."""
        out = self._call('run', str(GOLDEN), 'notTrue', '--trace')
        lines = out.strip().splitlines()
        self.assertIn('δdef', lines[0])
        self.assertTrue(lines[0].strip().startswith('1'))
        self.assertEqual(lines[-1], "#'False := #'Unit")

    @patch.object(settings, 'ROME_TRACE_LIMIT', 3)
    def test_trace_limit(self):
        """Steps past ROME_TRACE_LIMIT are elided."""
        out = self._call('run', str(GOLDEN), 'addOneTwo', '--trace')
        self.assertIn('further steps elided', out)
        self.assertNotIn('     4  ', out)

    def test_repl(self):
        """The REPL evaluates, defines and answers queries."""
        stdin = StringIO(':k Pair\nx = succ two\nx\nnope\n:t tt\n:quit\n')
        out = self._call('repl', stdin=stdin)
        self.assertIn('* -> * -> *', out)
        self.assertIn('x : ', out)
        self.assertIn(THREE, out)
        self.assertIn("#'Unit", out)
        self.assertIn("unbound identifier 'nope'", self.stderr.getvalue())

    def test_repl_multiline_declaration(self):
        """A signature line waits for its definition."""
        stdin = StringIO("y : Nat\ny = one\ny\n")
        out = self._call('repl', stdin=stdin)
        self.assertIn('y : ', out)
        self.assertIn("in (#'Succ := in (#'Zero := #'Unit))", out)
        self.assertEqual(self.stderr.getvalue(), '')

    def test_repl_load(self):
        """:load adds a file's definitions to the session."""
        path = self._write('more.rome', 'four : Nat\nfour = succ three\n')
        out = self._call('repl', stdin=StringIO(f':load {path}\nfour\n'))
        self.assertIn('Loaded 1 of 1 declarations', out)
        self.assertIn("in (#'Succ := in (#'Succ := in (#'Succ := in (#'Succ :=", out)
