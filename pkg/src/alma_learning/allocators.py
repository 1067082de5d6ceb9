"""Estimator-style wrappers around the allocation algorithms.

``fit(X)`` takes an agents x resources utility matrix (values in [0, 1]) and
does whatever learning the method needs; ``predict(X)`` returns one resource
id per agent (-1 when unmatched). Allocation is transductive: ``predict``
only accepts the matrix the estimator was fitted on.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_seed, check_utility_matrix
from .baselines import greedy, hungarian
from .core import Allocation, AssignmentInstance, RunConfig
from .engine import Arena, BackoffModel, agent_streams
from .learning import evaluate, starting_resource_stabilization, train


class BaseAllocator(BaseEstimator):
    """Shared fit/predict plumbing; subclasses implement ``_fit`` and ``_allocate``."""

    def fit(self, X, y=None, interest=None):
        X = check_utility_matrix(X)
        self.instance_ = AssignmentInstance(X, interest)
        self.n_agents_, self.n_resources_ = X.shape
        self._fit(self.instance_)
        return self

    def _check_same(self, X):
        check_is_fitted(self, "instance_")
        if X is None:
            return
        X = check_utility_matrix(X)
        if X.shape != self.instance_.utility.shape or not np.array_equal(X, self.instance_.utility):
            raise ValueError("predict expects the utility matrix the allocator was fitted on")

    def predict(self, X=None):
        self._check_same(X)
        return self._allocate().as_array()

    def fit_predict(self, X, y=None, interest=None):
        return self.fit(X, interest=interest).predict()

    def allocation(self, X=None):
        """The predicted :class:`Allocation` (with its social welfare)."""
        self._check_same(X)
        return self._allocate()

    def score(self, X=None, y=None):
        """Social welfare of the predicted allocation."""
        return self.allocation(X).social_welfare


class HungarianAllocator(BaseAllocator):
    """Exact maximum social-welfare matching."""

    def _fit(self, instance):
        self.allocation_ = hungarian(instance)

    def _allocate(self):
        return self.allocation_


class GreedyAllocator(BaseAllocator):
    """Agents in random order take their best free resource."""

    def __init__(self, random_state=None):
        self.random_state = random_state

    def _fit(self, instance):
        self.seed_ = check_seed(self.random_state)
        self.allocation_ = greedy(instance, self.seed_)

    def _allocate(self):
        return self.allocation_


class ALMALearningAllocator(BaseAllocator):
    """Decentralized learner: repeated ALMA stage games with learned starts and losses.

    ``fit`` runs ``training_steps`` learning stage games; ``predict`` plays
    frozen stage games. The estimator keeps one random stream per agent, so
    repeated ``predict`` calls continue the sequence (mixed outcomes are
    expected after training).

    Parameters
    ----------
    training_steps : int
    eval_steps : int
        Stage games used by :meth:`predict_allocations`.
    alpha, beta, epsilon, history_len : float / int
        Learning rate, back-off exponent, back-off clipping and reward window.
    backoff : {"power", "logistic"}
    gamma : float
        Steepness of the logistic back-off.
    tie_break : {"id", "random"}
        Order among equal utilities (see :meth:`Arena.from_instance`).
    round_cap : int or None
    random_state : int or None
    """

    def __init__(self, training_steps=512, eval_steps=32, alpha=0.1, beta=2.0, epsilon=0.01,
                 history_len=20, backoff="power", gamma=15.72, tie_break="id", round_cap=None,
                 random_state=None):
        self.training_steps = training_steps
        self.eval_steps = eval_steps
        self.alpha = alpha
        self.beta = beta
        self.epsilon = epsilon
        self.history_len = history_len
        self.backoff = backoff
        self.gamma = gamma
        self.tie_break = tie_break
        self.round_cap = round_cap
        self.random_state = random_state

    def _config(self):
        return RunConfig(seed=check_seed(self.random_state), training_steps=self.training_steps,
                         eval_steps=self.eval_steps, alpha=self.alpha, beta=self.beta,
                         epsilon=self.epsilon, history_len=self.history_len,
                         round_cap=self.round_cap)

    def _model(self):
        return BackoffModel(self.backoff, self.beta, self.epsilon, self.gamma)

    def _fit(self, instance):
        self.config_ = self._config()
        self.model_ = self._model()
        self.arena_ = Arena.from_instance(instance, self.tie_break, self.config_.seed)
        streams = agent_streams(self.config_.seed, instance.n_agents)
        self.result_ = train(self.arena_, self.config_, self.model_, streams=streams)
        self.trace_ = self.result_.trace
        self.t_conv_ = starting_resource_stabilization(self.trace_)

    def predict_allocations(self, X=None, n_steps=None):
        """Allocations of ``n_steps`` (default ``eval_steps``) frozen stage games."""
        self._check_same(X)
        steps = self.eval_steps if n_steps is None else n_steps
        trace = evaluate(self.arena_, self.result_, steps, self.model_, config=self.config_)
        return [Allocation.from_assignment(self.instance_, row) for row in trace.r_won]

    def _allocate(self):
        return self.predict_allocations(n_steps=1)[0]

    @property
    def learner_states_(self):
        check_is_fitted(self, "result_")
        return self.result_.states


class ALMAAllocator(ALMALearningAllocator):
    """Plain ALMA: the learner with no training, starting from each agent's top choice."""

    def __init__(self, eval_steps=1, beta=2.0, epsilon=0.01, backoff="power", gamma=15.72,
                 tie_break="id", round_cap=None, random_state=None):
        super().__init__(training_steps=0, eval_steps=eval_steps, beta=beta, epsilon=epsilon,
                         backoff=backoff, gamma=gamma, tie_break=tie_break, round_cap=round_cap,
                         random_state=random_state)
