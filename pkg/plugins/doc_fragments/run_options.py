"""
Documentation fragment for the run configuration shared by the msgcn modules.

Every pipeline module accepts the same global options and nested configuration
sections; they are validated by the argument specification in
plugins/module_utils/config.py.
"""


class ModuleDocFragment(object):
    DOCUMENTATION = """
options:
  seed:
    description:
    - Global random seed. Every random draw of the run derives from it.
        If the value is not specified in the task, the value of environment variable MSGCN_SEED will be used instead.
    type: int
    default: 0
  jobs:
    description:
    - Number of cross-validation folds or trial files processed concurrently.
        If the value is not specified in the task, the value of environment variable MSGCN_JOBS will be used instead.
    type: int
    default: 1
  precision:
    description:
    - Floating point precision of parameters and activations.
        If the value is not specified in the task, the value of environment variable MSGCN_PRECISION will be used instead.
    type: str
    choices: ['float64', 'float32']
    default: float64
  log_level:
    description:
    - Log level recorded in the configuration snapshot.
        If the value is not specified in the task, the value of environment variable MSGCN_LOG_LEVEL will be used instead.
    type: str
    choices: ['DEBUG', 'INFO', 'WARNING', 'ERROR']
    default: WARNING
  model:
    description:
    - Network architecture.
    type: dict
    default: {}
    suboptions:
      variant:
        description:
        - C(ms-gcn) graph generation stage plus refinement stages; C(st-gcn) graph stage only;
          C(ms-tcn) node-collapsed generation stage plus refinements; C(tcn) node-collapsed stage only.
        type: str
        choices: ['ms-gcn', 'st-gcn', 'ms-tcn', 'tcn']
        default: ms-gcn
      num_stages:
        description: Total number of stages. Forced to 1 for single-stage variants.
        type: int
        default: 5
      layers_per_stage:
        description: Residual blocks per stage; block i uses dilation 2**i.
        type: int
        default: 10
      channels:
        description: Hidden channels of every block.
        type: int
        default: 64
      kernel_size:
        description: Temporal kernel size (odd when acausal).
        type: int
        default: 3
      num_classes:
        description: Output classes (FG and FOG).
        type: int
        default: 2
      in_channels:
        description: Input channels per marker.
        type: int
        default: 3
      acausal:
        description: Center temporal kernels on the current sample instead of looking only at the past.
        type: bool
        default: true
      bn_momentum:
        description: Running statistics momentum of batch normalization.
        type: float
        default: 0.1
      bn_eps:
        description: Variance floor of batch normalization.
        type: float
        default: 0.00001
  loss:
    description:
    - Training objective.
    type: dict
    default: {}
    suboptions:
      smoothing_weight:
        description: Weight of the truncated smoothing term.
        type: float
        default: 0.15
        aliases: ['lambda']
      tau:
        description: Clipping threshold of adjacent log-probability differences.
        type: float
        default: 4.0
  train:
    description:
    - Optimization recipe.
    type: dict
    default: {}
    suboptions:
      epochs:
        description: Training epochs.
        type: int
        default: 100
      batch_size:
        description: Trials per mini-batch.
        type: int
        default: 16
      learning_rate:
        description: Adam step size.
        type: float
        default: 0.0005
        aliases: ['lr']
      beta1:
        description: Adam first moment decay.
        type: float
        default: 0.9
      beta2:
        description: Adam second moment decay.
        type: float
        default: 0.999
      adam_eps:
        description: Adam denominator offset.
        type: float
        default: 0.00000001
      log_every:
        description: Log the epoch loss every this many epochs.
        type: int
        default: 1
  synth:
    description:
    - Synthetic dataset recipe. Durations in seconds, frequencies in Hz, amplitudes in millimeters.
    - See the C(synth) module for the full list of keys.
    type: dict
    default: {}
  paths:
    description:
    - Free-form paths recorded in the configuration snapshot.
    type: dict
    default: {}
requirements:
  - numpy
  - scipy
  - pandas
  - packaging
"""
