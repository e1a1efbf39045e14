//! Hyperparameters and parameter counts of the three 7B base models the
//! workflow targets. Recorded for documentation only; nothing here is
//! trained.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceModel {
    pub name: &'static str,
    pub total_params: u64,
    pub layers: u32,
    pub hidden_size: u32,
    pub context_length: u32,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub trainable_params: u64,
    pub non_trainable_params: u64,
}

pub const REFERENCE_MODELS: [ReferenceModel; 3] = [
    ReferenceModel {
        name: "StableLM-Base-Alpha-7b",
        total_params: 7_868_755_968,
        layers: 16,
        hidden_size: 6144,
        context_length: 4096,
        learning_rate: 0.00016,
        beta1: 0.9,
        beta2: 0.9999,
        trainable_params: 3_136_672,
        non_trainable_params: 7_868_350_464,
    },
    ReferenceModel {
        name: "Falcon-7b",
        total_params: 6_921_720_704,
        layers: 32,
        hidden_size: 4544,
        context_length: 2048,
        learning_rate: 0.0006,
        beta1: 0.9,
        beta2: 0.9999,
        trainable_params: 3_839_186,
        non_trainable_params: 7_216_889_856,
    },
    ReferenceModel {
        name: "Llama-2-7b",
        total_params: 6_738_415_616,
        layers: 32,
        hidden_size: 4096,
        context_length: 4096,
        learning_rate: 0.0003,
        beta1: 0.9,
        beta2: 0.9999,
        trainable_params: 4_279_744,
        non_trainable_params: 6_738_149_376,
    },
];

pub fn reference_model(name: &str) -> Option<&'static ReferenceModel> {
    REFERENCE_MODELS.iter().find(|m| m.name.eq_ignore_ascii_case(name))
}

impl ReferenceModel {
    /// Training configuration carrying this model's optimizer settings.
    pub fn train_config(&self) -> super::TrainConfig {
        super::TrainConfig { learning_rate: self.learning_rate, beta1: self.beta1, beta2: self.beta2, ..Default::default() }
    }
}
