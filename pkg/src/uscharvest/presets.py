"""Named parameter presets for the headline scenarios.

Each preset is a plain mapping merged under any user config; the names
follow the figures they reproduce (harvesting pulse, robustness sweep,
thermal extraction, singlet protocol and protection, disorder ensembles,
flux-qubit landscape and constrained pulse, dissipative run).
"""

PRESETS = {
    # four-stage harvesting pulse, symmetric qubits
    "fig2b": {
        "scenario": "harvest",
        "config": {"n_qubits": 4, "n_fock": 100, "omega_max": 20.0,
                   "omega_min": 0.5, "g_max": 4.5, "g_min": 0.1,
                   "t1": 6.5, "t2": 6.5, "t3": 0.5, "t4": 0.5, "hold": 1.0},
    },
    # robustness of the extraction vs residual coupling and switching time
    "fig3b": {
        "scenario": "sweep",
        "config": {"base": {"n_qubits": 4, "n_fock": 100},
                   "g_min_values": [0.1, 0.2, 0.4, 0.7, 1.0],
                   "t4_values": [0.25, 0.5, 1.0, 2.0]},
    },
    # thermal initial resonator state
    "fig3c": {
        "scenario": "thermal",
        "config": {"base": {"n_qubits": 4, "n_fock": 100},
                   "n_cut": 10},
    },
    # singlet harvesting pulse
    "fig4": {
        "scenario": "singlet",
        "config": {"n_qubits": 4, "n_fock": 60, "omega_max": 10.0,
                   "omega_a": 0.48, "omega_b": 0.35, "g_max": 1.8},
    },
    # protection of the extracted dark state at finite coupling
    "fig4c": {
        "scenario": "protect",
        "config": {"n_qubits": 4, "omega_q": 10.0, "epsilon_max": 0.05,
                   "g_f_values": [0.0, 0.5, 1.0, 2.0], "runs": 10},
    },
    # fabrication disorder ensembles
    "figS2": {
        "scenario": "disorder",
        "config": {"base": {"n_qubits": 4, "n_fock": 100},
                   "epsilon_max": 0.1, "runs": 10},
    },
    # flux-qubit tunability landscape
    "figS7": {
        "scenario": "fluxmap",
        "config": {"n_alpha": 15, "n_beta": 15},
    },
    # constrained pulse synthesized from the flux path
    "figS8": {
        "scenario": "fluxpath",
        "config": {"n_qubits": 4, "t_up": 13.0, "t_down": 1.0, "hold": 1.0},
    },
    # cavity decay during the protocol
    "figS9": {
        "scenario": "dissipative",
        "config": {"n_qubits": 2, "n_fock": 60, "quality_factor": 100.0,
                   "omega_max": 10.0, "temperature": 0.0},
    },
    # spectrum vs coupling strength
    "fig1c": {
        "scenario": "spectrum",
        "config": {"n_qubits": 4, "n_fock": 140, "g_start": 0.0,
                   "g_stop": 5.0, "g_step": 0.05, "k_levels": 20},
    },
}
