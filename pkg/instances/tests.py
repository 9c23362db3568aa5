import json
import tempfile
from io import StringIO
from pathlib import Path

import networkx as nx
import numpy as np
from django.conf import settings
from django.contrib.auth.models import User
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase
from django.urls import reverse

from core.exceptions import InvalidConfig, VersionMismatch
from milp.instance import check_feasible
from milp.io import dumps_instance, read_instance, write_instance
from milp.oracle import brute_force_solve

from .forms import GenerateForm, parse_size
from .generators import SIZE_PRESETS, GenConfig, generate, generate_with_witness, greedy_clique_cover
from .manifest import MANIFEST_NAME, load_instance_set, read_manifest
from .models import Family, InstanceRecord


class GeneratorShapeTest(SimpleTestCase):

    def test_set_cover_dimensions(self):
        inst = generate(GenConfig(Family.SET_COVER, {'items': 400, 'sets': 750}, seed=1))
        self.assertEqual(inst.n_rows, 400)
        self.assertEqual(inst.n_vars, 750)

    def test_multi_knapsack_dimensions(self):
        inst = generate(GenConfig(Family.MULTI_KNAPSACK, {'items': 100, 'knapsacks': 6}, seed=1))
        self.assertEqual(inst.n_rows, 106)
        self.assertEqual(inst.n_vars, 600)

    def test_small_set_cover_covers_every_element_twice(self):
        for seed in range(20):
            inst = generate(GenConfig(Family.SET_COVER, {'items': 5, 'sets': 8}, seed=seed))
            per_row = np.diff(inst.rows.tocsr().indptr)
            self.assertTrue(np.all(per_row >= 2), msg=f"seed {seed}")

    def test_every_variable_is_binary(self):
        for family, sizes in SIZE_PRESETS['tiny'].items():
            inst = generate(GenConfig(family, sizes, seed=3))
            with self.subTest(family=family):
                self.assertEqual(inst.int_set, tuple(range(inst.n_vars)))
                np.testing.assert_array_equal(inst.lower, 0.0)
                np.testing.assert_array_equal(inst.upper, 1.0)

    def test_facility_location_layout(self):
        inst = generate(GenConfig(Family.FACILITY_LOC, {'customers': 4, 'facilities': 3}, seed=0))
        self.assertEqual(inst.n_vars, 4 * 3 + 3)
        self.assertEqual(inst.n_rows, 3 + 4)

    def test_maximisation_families_are_named(self):
        cfg = GenConfig(Family.COMB_AUCTION, {'items': 30, 'bids': 150}, seed=7)
        self.assertEqual(cfg.instance_name(), 'cauctions-30x150-s7-negmax')
        cfg = GenConfig(Family.SET_COVER, {'items': 60, 'sets': 120}, seed=7)
        self.assertEqual(cfg.instance_name(), 'setcover-60x120-s7')


class GeneratorPropertyTest(SimpleTestCase):

    def test_witness_is_feasible(self):
        for family, sizes in SIZE_PRESETS['desk'].items():
            for seed in range(5):
                inst, witness = generate_with_witness(GenConfig(family, sizes, seed))
                with self.subTest(family=family, seed=seed):
                    check = check_feasible(inst, witness)
                    self.assertTrue(check.is_feasible, msg=f"violation {check.max_violation}")

    def test_same_seed_same_bytes(self):
        for family, sizes in SIZE_PRESETS['desk'].items():
            first = dumps_instance(generate(GenConfig(family, sizes, 11)))
            second = dumps_instance(generate(GenConfig(family, sizes, 11)))
            other = dumps_instance(generate(GenConfig(family, sizes, 12)))
            with self.subTest(family=family):
                self.assertEqual(first, second)
                self.assertNotEqual(first, other)

    def test_tiny_instances_have_an_optimum(self):
        for family, sizes in SIZE_PRESETS['tiny'].items():
            inst = generate(GenConfig(family, sizes, 0))
            with self.subTest(family=family):
                self.assertIsNotNone(brute_force_solve(inst, settings.TREEBRANCH['ENUM_CAP']))

    def test_clique_cover_covers_every_edge(self):
        graph = nx.barabasi_albert_graph(60, 4, seed=5)
        covered = set()
        for clique in greedy_clique_cover(graph):
            for a in clique:
                for b in clique:
                    if a < b:
                        self.assertTrue(graph.has_edge(a, b))
                        covered.add((a, b))
        self.assertEqual(covered, {tuple(sorted(e)) for e in graph.edges()})

    def test_independent_set_rows_bound_each_edge(self):
        inst, _ = generate_with_witness(GenConfig(Family.MAX_INDEP_SET, {'nodes': 8, 'affinity': 2}, 4))
        dense = inst.dense_rows()
        x = np.zeros(inst.n_vars)
        x[:2] = 1.0
        together = np.any(dense[:, 0] * dense[:, 1] > 0)
        self.assertEqual(check_feasible(inst, x).is_feasible, not together)


class GenConfigTest(SimpleTestCase):

    def test_unknown_family(self):
        with self.assertRaises(InvalidConfig):
            GenConfig('lotsizing', {'items': 3}).validate()

    def test_wrong_parameter_names(self):
        with self.assertRaises(InvalidConfig):
            GenConfig(Family.SET_COVER, {'items': 10, 'bids': 20}).validate()

    def test_non_positive_sizes(self):
        with self.assertRaises(InvalidConfig):
            GenConfig(Family.SET_COVER, {'items': 0, 'sets': 20}).validate()

    def test_affinity_must_be_below_node_count(self):
        with self.assertRaises(InvalidConfig):
            GenConfig(Family.MAX_INDEP_SET, {'nodes': 4, 'affinity': 4}).validate()


class GenerateFormTest(SimpleTestCase):

    def options(self, **overrides):
        options = {'family': 'setcover', 'count': 3, 'seed': 0, 'preset': 'desk', 'size': None, 'out': 'out'}
        options.update(overrides)
        return options

    def test_parse_size(self):
        self.assertEqual(parse_size('items=60, sets=120'), {'items': 60, 'sets': 120})

    def test_preset_with_override(self):
        cleaned = GenerateForm(self.options(size='sets=90')).cleaned_or_error()
        self.assertEqual(cleaned['family'], Family.SET_COVER)
        self.assertEqual(cleaned['size_params'], {'items': 60, 'sets': 90})

    def test_unknown_size_parameter(self):
        with self.assertRaises(CommandError):
            GenerateForm(self.options(size='bids=4')).cleaned_or_error()

    def test_malformed_size(self):
        with self.assertRaises(CommandError):
            GenerateForm(self.options(size='items:4')).cleaned_or_error()

    def test_unknown_family(self):
        with self.assertRaises(CommandError):
            GenerateForm(self.options(family='tsp')).cleaned_or_error()


class ManifestTest(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def test_directory_without_manifest_lists_json_files(self):
        for seed in (2, 1):
            inst = generate(GenConfig(Family.SET_COVER, {'items': 5, 'sets': 8}, seed))
            write_instance(inst, self.dir / f"{inst.name}.json")
        manifest = read_manifest(self.dir)
        self.assertEqual([e.file for e in manifest.entries], ['setcover-5x8-s1.json', 'setcover-5x8-s2.json'])
        self.assertTrue(all(e.optimum is None for e in manifest.entries))
        self.assertEqual(len(load_instance_set(self.dir)), 2)

    def test_unknown_manifest_version(self):
        (self.dir / MANIFEST_NAME).write_text(json.dumps({'format': 99, 'instances': []}))
        with self.assertRaises(VersionMismatch):
            read_manifest(self.dir)


class GenerateCommandTest(TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.out = Path(self.tmp.name) / 'sc'

    def generate(self, **kwargs):
        call_command(
            'generate', family='setcover', count=3, seed=5, preset='tiny', out=str(self.out),
            stdout=StringIO(), **kwargs,
        )

    def test_writes_instances_manifest_and_records(self):
        self.generate()
        manifest = read_manifest(self.out)
        self.assertEqual([e.seed for e in manifest.entries], [5, 6, 7])
        self.assertEqual(manifest.family, 'setcover')
        for entry in manifest.entries:
            self.assertTrue((self.out / entry.file).exists())
        self.assertEqual(InstanceRecord.objects.filter(family=Family.SET_COVER).count(), 3)

    def test_rerun_is_byte_identical_and_keeps_one_record_per_file(self):
        self.generate()
        first = {p.name: p.read_bytes() for p in self.out.iterdir()}
        self.generate()
        self.assertEqual({p.name: p.read_bytes() for p in self.out.iterdir()}, first)
        self.assertEqual(InstanceRecord.objects.count(), 3)

    def test_presolve_stores_optima(self):
        self.generate()
        call_command('presolve_optima', instance_dir=str(self.out), stdout=StringIO())
        for item in load_instance_set(self.out):
            expected = brute_force_solve(item.instance, settings.TREEBRANCH['ENUM_CAP']).obj_value
            self.assertAlmostEqual(item.optimum, expected, places=6)
            record = InstanceRecord.objects.get(path=str(item.path.resolve()))
            self.assertAlmostEqual(record.optimal_value, expected, places=6)

    def test_invalid_size_is_a_command_error(self):
        with self.assertRaises(CommandError):
            self.generate(size='items=0')

    def test_instance_files_parse(self):
        self.generate()
        for entry in read_manifest(self.out).entries:
            self.assertEqual(read_instance(self.out / entry.file).n_vars, 8)


class InstanceAdminTest(TestCase):

    def test_changelist_lists_records(self):
        InstanceRecord.objects.create(
            name='setcover-5x8-s0', family=Family.SET_COVER, size_params={'items': 5, 'sets': 8},
            seed=0, path='/tmp/setcover-5x8-s0.json',
        )
        admin = User.objects.create_superuser('admin', 'admin@example.com', 'pw')
        self.client.force_login(admin)
        response = self.client.get(reverse('admin:instances_instancerecord_changelist'))
        self.assertEqual(response.status_code, 200)
        self.assertContains(response, 'setcover-5x8-s0')
