import heapq
import math
import operator
import random

from django.test import SimpleTestCase

from ntsort.losertree import LoserTree


class LoserTreeTests(SimpleTestCase):
    def test_no_sources(self):
        self.assertEqual(list(LoserTree([])), [])

    def test_single_source_is_identity(self):
        self.assertEqual([x for _, x in LoserTree([[1, 2, 2, 5]])], [1, 2, 2, 5])

    def test_two_runs(self):
        merged = [x for _, x in LoserTree([['a', 'c'], ['b', 'd']])]
        self.assertEqual(merged, ['a', 'b', 'c', 'd'])

    def test_empty_runs_are_skipped(self):
        merged = list(LoserTree([[], [3], [], [1, 2], []]))
        self.assertEqual(merged, [(3, 1), (3, 2), (1, 3)])

    def test_ties_go_to_lower_source(self):
        merged = list(LoserTree([[1, 2], [1, 2], [1]]))
        self.assertEqual(merged, [(0, 1), (1, 1), (2, 1), (0, 2), (1, 2)])

    def test_descending_with_custom_order(self):
        merged = [x for _, x in LoserTree([[9, 4, 1], [8, 7, 0]], operator.gt)]
        self.assertEqual(merged, [9, 8, 7, 4, 1, 0])

    def test_matches_heapq_merge(self):
        rng = random.Random(1998)
        for _ in range(300):
            k = rng.randint(1, 13)
            runs = [sorted(rng.randint(0, 50) for _ in range(rng.randint(0, 20))) for _ in range(k)]
            with self.subTest(runs=runs):
                self.assertEqual([x for _, x in LoserTree(runs)], list(heapq.merge(*runs)))

    def test_logarithmic_comparisons(self):
        k, per_run = 64, 200
        runs = [list(range(i, k * per_run, k)) for i in range(k)]
        tree = LoserTree(runs)
        self.assertEqual([x for _, x in tree], list(range(k * per_run)))
        # build plus one root path per emitted item
        bound = k + k * per_run * math.ceil(math.log2(k))
        self.assertLessEqual(tree.comparisons, bound)
