from .data import (Dataset, NormalizationParams, denormalize, normalize_apply,
                   normalize_fit, pearson_correlation)
from .knn import KnnModel, predict_knn, train_knn
from .mlp import (AdamState, MlpModel, adam_step, init_mlp, mlp_backward, mlp_forward,
                  mse_loss, predict_mlp, train_mlp)
from .models import (DEFAULT_HYPERPARAMETERS, MODEL_KINDS, MODEL_LABELS, TrainedModel,
                     fit_model, hyperparameters_for, predict)
from .multi import MultiOutputModel, predict_multi, train_multi
from .svr import SvrModel, predict_svr, rbf_kernel, train_svr
from .tree import TreeModel, predict_tree, train_tree
from .coefficients import FieldSurrogate, coefficient_dataset, train_coefficient_regressor
