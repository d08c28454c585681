/// A scenario shipped inside the binary.
#[derive(Debug, Clone, Copy)]
pub struct Bundled {
    pub name: &'static str,
    pub text: &'static str,
}

macro_rules! bundle {
    ($($name:literal),* $(,)?) => {
        &[$(Bundled { name: $name, text: include_str!(concat!("../../scenarios/", $name, ".toml")) }),*]
    };
}

pub const BUNDLED: &[Bundled] = bundle![
    "circular-patch-stationary",
    "elliptic-patch-iterated-log",
    "two-vortex-euler",
    "radial-stationary-euler",
    "main-inequality-sweep",
    "commutator-sweep",
    "tangential-aspect-sweep",
    "radial-kernel-iterated-log",
    "osgood-envelope-theta",
    "hypotheses-log-table",
    "hypotheses-iterated-log",
];

pub fn bundled(name: &str) -> Option<&'static Bundled> {
    BUNDLED.iter().find(|b| b.name == name)
}
