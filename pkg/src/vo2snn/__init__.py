"""VO2 Mott-oscillator neurons: device model, circuit simulation,
characterization sweeps and a rate-coded spiking network."""

from .device import DeviceParams, DeviceState, device_params, load_device_table
from .oscillator import (
    NeuronCircuit,
    NotOscillating,
    Response,
    closed_form_period,
    classify_response,
    extract_spikes,
    simulate,
)
from .characterization import iv_sweep, phase_diagram, power_curve, threshold_stats, vf_curve
from .snn import (
    Network,
    RasterPlot,
    RateTransfer,
    TrainConfig,
    build_transfer,
    evaluate,
    forward,
    init_network,
    simulate_2x2,
    simulate_network_timedomain,
    train,
)
from .mnist_io import Dataset, encode_rate, load_idx_images, load_idx_labels, load_split

__version__ = "0.1.0"
