import json
import os
import tempfile

import pandas as pd
from django.test import SimpleTestCase, override_settings

from core.conf import DEFAULTS, lab_setting
from core.exceptions import DimensionMismatchError, FloorDominatedError, LabError, UnknownModelError
from utils.storage import LocalArtifactStorage, get_artifact_storage


class LabSettingTest(SimpleTestCase):
    def test_override_wins(self):
        self.assertEqual(lab_setting('FD_STEP', 1e-3), 1e-3)

    @override_settings(SURFACELAB={'NEWTON_TOL': 1e-9})
    def test_settings_dict(self):
        self.assertEqual(lab_setting('NEWTON_TOL'), 1e-9)

    @override_settings(SURFACELAB={})
    def test_falls_back_to_defaults(self):
        self.assertEqual(lab_setting('CFL'), DEFAULTS['CFL'])

    def test_unknown_name(self):
        with self.assertRaises(KeyError):
            lab_setting('WARP_FACTOR')


class ExceptionTest(SimpleTestCase):
    def test_hierarchy(self):
        self.assertTrue(issubclass(DimensionMismatchError, ValueError))
        self.assertTrue(issubclass(UnknownModelError, LabError))

    def test_floor_is_carried(self):
        error = FloorDominatedError("no slope", floor=1e-12)
        self.assertEqual(error.floor, 1e-12)
        self.assertIsInstance(error, LabError)


class ArtifactStorageTest(SimpleTestCase):
    def test_writes_json_and_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            root = os.path.join(tmp, 'nested')
            storage = get_artifact_storage(root)
            self.assertIsInstance(storage, LocalArtifactStorage)
            storage.write_table('t.csv', pd.DataFrame({'K': [16, 32], 'residual': [0.1, 1 / 3]}))
            storage.write_json('report.json', {'b': 1, 'a': [1.5]})
            self.assertEqual(storage.written, ['t.csv', 'report.json'])
            with open(storage.location('report.json'), encoding='utf-8') as f:
                self.assertEqual(json.load(f), {'a': [1.5], 'b': 1})
            frame = pd.read_csv(storage.location('t.csv'))
            self.assertEqual(frame['residual'][1], 1 / 3)

    def test_unserializable_payload(self):
        with tempfile.TemporaryDirectory() as tmp:
            storage = LocalArtifactStorage(tmp)
            with self.assertRaises(TypeError):
                storage.write_json('bad.json', {'x': object()})
            self.assertEqual(storage.written, [])
