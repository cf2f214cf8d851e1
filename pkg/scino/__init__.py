"""SciNO score network, hyper-parameters and checkpoints."""
