import os
import tempfile
import unittest

from fcmcodec.backend.errors import FormatError, GainLengthError, IoError, UnknownGainIndex
from fcmcodec.backend.model import GainTable
from fcmcodec.backend.repositories.gain_repo import GainTableRepository


class TestGainTableRepository(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, 'gains.yml')
        with open(self.path, 'w') as f:
            f.write('1: "2.0,0.5,1.0"\n2: [1, 1, 4]\n')
        self.repo = GainTableRepository(self.path)

    def tearDown(self):
        self.tmp.cleanup()

    def test_load(self):
        table = self.repo.load()
        self.assertEqual(table.vectors, {1: [2.0, 0.5, 1.0], 2: [1.0, 1.0, 4.0]})

    def test_get_vector(self):
        vector = self.repo.get_vector(1, 3)
        self.assertEqual(vector.index, 1)
        self.assertEqual(vector.multipliers, [2.0, 0.5, 1.0])

    def test_index_zero_defaults_to_unit(self):
        vector = self.repo.get_vector(0, 5)
        self.assertEqual(vector.multipliers, [1.0] * 5)

    def test_unknown_index(self):
        with self.assertRaises(UnknownGainIndex):
            self.repo.get_vector(7, 3)

    def test_length_mismatch(self):
        with self.assertRaises(GainLengthError):
            self.repo.get_vector(1, 4)

    def test_in_memory_table(self):
        repo = GainTableRepository(table=GainTable(vectors={0: [3.0, 3.0]}))
        self.assertEqual(repo.get_vector(0, 2).multipliers, [3.0, 3.0])

    def test_non_positive_multiplier(self):
        repo = GainTableRepository(table=GainTable(vectors={1: [1.0, 0.0]}))
        with self.assertRaises(FormatError):
            repo.get_vector(1, 2)

    def test_missing_file(self):
        with self.assertRaises(IoError):
            GainTableRepository(os.path.join(self.tmp.name, 'absent.yml')).load()

    def test_bad_entry(self):
        with open(self.path, 'w') as f:
            f.write('1: "a,b"\n')
        with self.assertRaises(FormatError):
            GainTableRepository(self.path).load()


if __name__ == '__main__':
    unittest.main()
