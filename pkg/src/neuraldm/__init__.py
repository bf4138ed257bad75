"""Two-phase neural dialogue management toolkit.

A multi-head policy network is first trained by supervision on a labeled
dialogue corpus, then improved by episodic natural-gradient reinforcement
learning against a simulated user with a controllable semantic-error channel.
A FastAPI service exposes the trained policy for live chat and rating
collection.
"""

from .actions import DIA_ACTS, QUERY_SLOTS, MasterAction, masked_action
from .baseline import BaselineConfig, baseline_act
from .belief import BeliefState, UserActHypothesis, featurize, focus_update, top_query
from .corpus import DialogueCorpus, generate_corpus, load_corpus, save_corpus
from .database import DbQuery, Venue, VenueDatabase, generate_database, match_bucket
from .dialogue import DialogueManager, SimulatedEnvironment
from .ontology import DONTCARE, Ontology, default_ontology
from .policy import (
    ActionDistribution,
    PolicyParams,
    forward,
    grad_log_prob,
    grad_supervised_loss,
    init_params,
    log_prob,
    select_action,
)
from .rl import (
    Episode,
    ReplayPool,
    RLConfig,
    Transition,
    enac_step,
    normalize_return,
    reinforce_gradient,
    returns,
    rl_train,
)
from .simulator import ErrorModel, UserGoal, UserSimulator, corrupt, sample_goal, success_judge
from .sl import SLConfig, train_sl, weighted_f1

__version__ = "0.1.0"
