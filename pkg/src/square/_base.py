"""Shared plumbing for estimators that take block-wise observed ``X`` (NaN = unobserved)."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_block_array
from .block_data import BlockPartition, SqdDataset, make_partition
from .exceptions import DataError


def resolve_partition(block_sizes=None, blocks=None):
    if (block_sizes is None) == (blocks is None):
        raise DataError("give exactly one of block_sizes or blocks")
    if blocks is not None:
        return BlockPartition.from_index_sets(blocks)
    return make_partition(int(np.sum(block_sizes)), block_sizes)


class BlockEstimator(BaseEstimator, RegressorMixin):
    """Base for estimators fit on split-questionnaire data.

    Subclasses implement ``fit_dataset(dataset)`` and ``_predict(X)``;
    ``fit(X, y)`` builds and validates the dataset from an array whose
    missing covariates are NaN.
    """

    def _partition(self):
        return resolve_partition(self.block_sizes, self.blocks)

    def fit(self, X, y):
        partition = self._partition()
        X = check_block_array(X, partition.p)
        dataset = SqdDataset.from_arrays(y, X, partition)
        return self.fit_dataset(dataset)

    def predict(self, X):
        check_is_fitted(self, "partition_")
        X = check_block_array(X, self.partition_.p)
        return self._predict(X)
