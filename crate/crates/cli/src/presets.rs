//! Built-in sweep presets mirroring the numerical experiments.

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub config: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig1a",
        description: "one-qubit pi rotation, 5-spin bath at 2pi x 1 MHz, 5 ns pulses; \
                      fidelity vs gate duration for none/pdd/cdd2",
        config: r#"
kind = "sweep"

[model]
system_qubits = 1
bath_spins = 5
epsilon_mhz = 1.0

[target]
kind = "rotation"
theta_rad = 3.141592653589793
phi_rad = 0.7853981633974483

[drive]
tau_ns = 5.0

[pulse]
width_ns = 5.0
rabi_mhz = 100.0

[initial]
system = "plus"

[sweep]
axis = "gate-duration-ns"
points = [2.0, 4.0, 7.0, 12.0, 20.0, 35.0, 60.0, 100.0, 170.0, 300.0]
sequences = ["none", "pdd", "cdd2"]
"#,
    },
    Preset {
        name: "fig1b",
        description: "one-qubit pi rotation under nested UDD n=2/n=4; \
                      fidelity vs gate duration",
        config: r#"
kind = "sweep"

[model]
system_qubits = 1
bath_spins = 5
epsilon_mhz = 1.0

[target]
kind = "rotation"
theta_rad = 3.141592653589793
phi_rad = 0.7853981633974483

[drive]
tau_ns = 5.0

[pulse]
width_ns = 5.0
rabi_mhz = 100.0

[initial]
system = "plus"

[sweep]
axis = "gate-duration-ns"
points = [2.0, 4.0, 7.0, 12.0, 20.0, 35.0, 60.0, 100.0, 170.0, 300.0]
sequences = ["none", "udd2", "udd4"]
"#,
    },
    Preset {
        name: "fig2a",
        description: "two-qubit CR(-pi/2) at J = 2pi x 5 MHz with 2.5 ns pulses; \
                      fidelity vs system-environment coupling for none/2q-pdd/2q-cdd2",
        config: r#"
kind = "sweep"

[model]
system_qubits = 2
bath_spins = 5
epsilon_mhz = 1.0

[target]
kind = "cross-resonance"
theta_rad = -1.5707963267948966

[drive]
amplitude_mhz = 5.0

[pulse]
width_ns = 2.5

[initial]
system = "11"

[sweep]
axis = "epsilon-mhz"
points = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
sequences = ["none", "2q-pdd", "2q-cdd2"]
"#,
    },
    Preset {
        name: "fig2c",
        description: "two-qubit CR(-pi/2) under nested UDD n=2/n=4 with 0.5 ns pulses; \
                      fidelity vs system-environment coupling",
        config: r#"
kind = "sweep"

[model]
system_qubits = 2
bath_spins = 5
epsilon_mhz = 1.0

[target]
kind = "cross-resonance"
theta_rad = -1.5707963267948966

[drive]
amplitude_mhz = 5.0

[pulse]
width_ns = 0.5

[initial]
system = "11"

[sweep]
axis = "epsilon-mhz"
points = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
sequences = ["none", "2q-udd2", "2q-udd4"]
"#,
    },
    Preset {
        name: "fig2d",
        description: "two-qubit CR(-pi/2) at epsilon = 0.2 J; fidelity vs DD pulse \
                      width for nested UDD n=2/n=4 (the curves cross)",
        config: r#"
kind = "sweep"

[model]
system_qubits = 2
bath_spins = 5
epsilon_mhz = 1.0

[target]
kind = "cross-resonance"
theta_rad = -1.5707963267948966

[drive]
amplitude_mhz = 5.0

[initial]
system = "11"

[sweep]
axis = "pulse-width-ns"
points = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5]
sequences = ["2q-udd2", "2q-udd4"]
"#,
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
