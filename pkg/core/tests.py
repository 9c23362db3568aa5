import tempfile

from django import forms
from django.core.management import call_command, get_commands
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from .exceptions import InvalidConfig, ParseError, PolicyNotFound, TooLarge, TreeBranchError, VersionMismatch
from .forms import CommandOptionsForm, DirectoryField, SeedField
from .seeding import derive_seed, make_rng


class SeedingTest(SimpleTestCase):

    def test_same_seed_same_stream(self):
        self.assertEqual(list(make_rng(11).integers(0, 1000, 5)), list(make_rng(11).integers(0, 1000, 5)))

    def test_derived_seeds_are_stable_and_distinct(self):
        self.assertEqual(derive_seed(0, 3, 1), derive_seed(0, 3, 1))
        seeds = {derive_seed(0, epoch, k) for epoch in range(20) for k in range(10)}
        self.assertEqual(len(seeds), 200)
        self.assertNotEqual(derive_seed(0, 1, 2), derive_seed(0, 2, 1))
        self.assertNotEqual(derive_seed(0, 1), derive_seed(1, 1))

    def test_derived_seed_fits_in_63_bits(self):
        for master in (0, 1, 2 ** 63 - 1, -1):
            self.assertTrue(0 <= derive_seed(master, 5) < 2 ** 63)


class OptionsForm(CommandOptionsForm):
    directory = DirectoryField()
    out = DirectoryField(must_exist=False, required=False)
    seed = SeedField(required=False)
    count = forms.IntegerField(min_value=1)


class CommandOptionsFormTest(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_none_options_clean_to_none(self):
        opts = OptionsForm({'directory': self.tmp.name, 'out': None, 'seed': None, 'count': 2}).cleaned_or_error()
        self.assertIsNone(opts['seed'])
        self.assertEqual(opts['out'], '')
        self.assertEqual(opts['count'], 2)

    def test_errors_become_command_errors(self):
        with self.assertRaisesMessage(CommandError, 'count'):
            OptionsForm({'directory': self.tmp.name, 'count': 0}).cleaned_or_error()

    def test_directory_must_exist(self):
        form = OptionsForm({'directory': f'{self.tmp.name}/missing', 'count': 1})
        self.assertFalse(form.is_valid())
        self.assertIn('directory', form.errors)
        form = OptionsForm({'directory': self.tmp.name, 'out': f'{self.tmp.name}/new', 'count': 1})
        self.assertTrue(form.is_valid())

    def test_seed_range(self):
        for seed in (-1, 2 ** 63):
            form = OptionsForm({'directory': self.tmp.name, 'seed': seed, 'count': 1})
            self.assertFalse(form.is_valid(), seed)


class ExceptionTest(SimpleTestCase):

    def test_parse_error_location(self):
        exc = ParseError("expected a number", path='a.json', line=3, field='rhs')
        self.assertEqual(str(exc), "a.json, line 3, field 'rhs': expected a number")
        self.assertEqual(exc.detail, "expected a number")
        self.assertEqual(str(ParseError("empty file")), "empty file")

    def test_hierarchy(self):
        self.assertTrue(issubclass(VersionMismatch, ParseError))
        for cls in (ParseError, InvalidConfig, PolicyNotFound, TooLarge):
            self.assertTrue(issubclass(cls, TreeBranchError))
        self.assertTrue(issubclass(PolicyNotFound, FileNotFoundError))
        self.assertIsInstance(InvalidConfig("x"), ValueError)

    def test_too_large_message(self):
        exc = TooLarge(2 ** 30, 2 ** 20)
        self.assertEqual((exc.size, exc.cap), (2 ** 30, 2 ** 20))
        self.assertIn('exceeds cap', str(exc))


class CommandRegistryTest(SimpleTestCase):

    def test_subcommands_are_registered(self):
        commands = get_commands()
        for name in ('generate', 'presolve_optima', 'solve', 'train', 'imitate', 'evaluate',
                     'validate_gradient', 'replay_episode'):
            self.assertIn(name, commands)

    def test_unknown_subcommand(self):
        with self.assertRaisesMessage(CommandError, 'Unknown command'):
            call_command('branch_everything')
