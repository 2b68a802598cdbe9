import operator


class LoserTree:
    """Tournament of losers over k sorted iterators.

    Leaf i sits at position k + i of a heap-shaped array, internal node p
    remembers the loser of the match played there and ``losers[0]`` holds the
    overall winner. Replacing the winner replays only the matches on its path
    to the root, so each emitted item costs about ceil(log2 k) comparisons.
    Equal heads are won by the lower source index.
    """

    def __init__(self, sources, less=operator.lt):
        self.less = less
        self.sources = [iter(s) for s in sources]
        self.k = len(self.sources)
        self.heads = [None] * self.k
        self.live = [False] * self.k
        self.losers = [0] * max(self.k, 1)
        self.comparisons = 0
        for i in range(self.k):
            self._advance(i)
        if self.k:
            self._build()

    def _advance(self, i):
        try:
            self.heads[i] = next(self.sources[i])
            self.live[i] = True
        except StopIteration:
            self.heads[i] = None
            self.live[i] = False

    def _beats(self, i, j):
        if not self.live[j]:
            return True
        if not self.live[i]:
            return False
        self.comparisons += 1
        a, b = self.heads[i], self.heads[j]
        if self.less(a, b):
            return True
        if self.less(b, a):
            return False
        return i < j

    def _build(self):
        k = self.k
        winners = [0] * (2 * k)
        for i in range(k):
            winners[k + i] = i
        for p in range(k - 1, 0, -1):
            left, right = winners[2 * p], winners[2 * p + 1]
            if self._beats(left, right):
                winners[p], self.losers[p] = left, right
            else:
                winners[p], self.losers[p] = right, left
        self.losers[0] = winners[1] if k > 1 else 0

    def _replay(self, source):
        winner = source
        p = (source + self.k) // 2
        while p >= 1:
            if self._beats(self.losers[p], winner):
                self.losers[p], winner = winner, self.losers[p]
            p //= 2
        self.losers[0] = winner

    def __iter__(self):
        return self

    def __next__(self):
        if not self.k:
            raise StopIteration
        winner = self.losers[0]
        if not self.live[winner]:
            raise StopIteration
        item = self.heads[winner]
        self._advance(winner)
        self._replay(winner)
        return winner, item
