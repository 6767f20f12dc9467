use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFamily {
    Mnist,
    FashionMnist,
    Cifar10,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetKind {
    Fc,
    Conv,
}

/// Published ε for each measure and the common δ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumePreset {
    pub bvol_epsilon: f64,
    pub train_bvol_epsilon: f64,
    pub ladv_bvol_epsilon: f64,
    pub delta: f64,
}

const fn p(bvol: f64, train: f64, ladv: f64, delta: f64) -> VolumePreset {
    VolumePreset {
        bvol_epsilon: bvol,
        train_bvol_epsilon: train,
        ladv_bvol_epsilon: ladv,
        delta,
    }
}

/// ε/δ settings used for each dataset and architecture.
pub fn volume_preset(data: DataFamily, net: NetKind) -> VolumePreset {
    use DataFamily::*;
    use NetKind::*;
    match (data, net) {
        (Mnist, Fc) => p(0.001, 0.003, 0.001, 0.2),
        (FashionMnist, Fc) => p(0.001, 0.003, 0.0008, 0.2),
        (Cifar10, Fc) => p(0.002, 0.003, 0.0008, 0.2),
        (Mnist, Conv) => p(0.0005, 0.002, 0.0003, 0.2),
        (FashionMnist, Conv) => p(0.001, 0.003, 0.001, 0.2),
        (Cifar10, Conv) => p(0.001, 0.0025, 0.0005, 0.05),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mnist_fc_values() {
        let v = volume_preset(DataFamily::Mnist, NetKind::Fc);
        assert_eq!(v.train_bvol_epsilon, 0.003);
        assert_eq!(v.ladv_bvol_epsilon, 0.001);
        assert_eq!(v.delta, 0.2);
        assert_eq!(volume_preset(DataFamily::Cifar10, NetKind::Conv).delta, 0.05);
    }
}
