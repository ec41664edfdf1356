"""CMI-weighted focal loss, cosine-normalised head and pseudo-labelling for
code-mixed offensive-language classification, with the evaluation tools to
compare configurations."""

from cmifl._accel import backend_name
from cmifl.cmi import CmiScore, CorpusCmiProfile, batch_cmi, corpus_profile, sentence_cmi
from cmifl.evaluation import chi_square_sf, confusion, metrics, stuart_maxwell
from cmifl.loss import (
    ClassWeights,
    LossConfig,
    LossKind,
    class_weights_from_counts,
    cmi_fl,
    cmi_multiplier,
    focal,
    weighted_ce,
)
from cmifl.model import FeatureConfig, ModelParams, featurize, forward, predict, squash
from cmifl.textlang import Dictionary, LangTag, tag_sentence, tokenize
from cmifl.train import TrainConfig, pseudo_label, train, train_with_pseudo

__version__ = "0.1.0"
