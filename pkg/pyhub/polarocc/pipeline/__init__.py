from .ablation import STUDY_ROWS, AblationRow, AblationTable, AblationToggles, ablate, run_row
from .config import ModelConfig, config_from_dict, load_config
from .dataset import (
    Sample,
    build_dataset,
    build_sample,
    evaluate_samples,
    load_sample,
    load_samples,
    oracle_predict,
    sample_paths,
    scene_map,
    split_seeds,
    write_sample_files,
)
from .gradcheck import GradcheckEntry, GradcheckReport, gradcheck_all, tiny_config
from .model import (
    ForwardCache,
    ModelInputs,
    backward_features,
    forward,
    forward_features,
    forward_features_cached,
    loss_and_grads,
    loss_and_input_grads,
    loss_value,
    predict_inputs,
    prepare_inputs,
)
from .params import GRP_MODULES, ParamStore, param_layout
from .stats import ModuleStats, density_study, model_stats, pd_param_identity, pooled_histogram, stats_to_dict
from .trainer import Adam, TrainLog, TrainStep, train

__all__ = [
    "GRP_MODULES",
    "STUDY_ROWS",
    "AblationRow",
    "AblationTable",
    "AblationToggles",
    "Adam",
    "ForwardCache",
    "GradcheckEntry",
    "GradcheckReport",
    "ModelConfig",
    "ModelInputs",
    "ModuleStats",
    "ParamStore",
    "Sample",
    "TrainLog",
    "TrainStep",
    "ablate",
    "backward_features",
    "build_dataset",
    "build_sample",
    "config_from_dict",
    "density_study",
    "evaluate_samples",
    "forward",
    "forward_features",
    "forward_features_cached",
    "gradcheck_all",
    "load_config",
    "load_sample",
    "load_samples",
    "loss_and_grads",
    "loss_and_input_grads",
    "loss_value",
    "model_stats",
    "oracle_predict",
    "param_layout",
    "pd_param_identity",
    "pooled_histogram",
    "predict_inputs",
    "prepare_inputs",
    "run_row",
    "sample_paths",
    "scene_map",
    "split_seeds",
    "stats_to_dict",
    "tiny_config",
    "train",
    "write_sample_files",
]
