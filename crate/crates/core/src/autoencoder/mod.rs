//! Single-hidden-layer autoencoder: forward pass, objective, backprop, SGD training, model files.

mod backprop;
mod io;
mod loss;
mod params;
mod train;

pub use backprop::backprop;
pub use io::{load_model, save_model, Model, FORMAT_VERSION};
pub use loss::{
    evaluate_loss, forward_batch, latent_l1, objective_unchecked, reconstruction_loss, total_loss,
    LossBreakdown,
};
pub use params::{
    decode, encode, init_params, ActivationKind, Activations, AutoencoderParams, ForwardTrace,
    Gradients,
};
pub use train::{
    sgd_step, train, TrainConfig, TrainHistory, DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS, DEFAULT_LAMBDA,
    DEFAULT_LATENT_DIM, DEFAULT_LEARNING_RATE,
};

#[cfg(test)]
mod proptests {
    use proptest::prelude::*;

    use super::*;
    use crate::numerics::{Matrix, SeededRng};

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn decode_encode_keeps_dimension(d in 1usize..20, k in 1usize..20, seed in any::<u64>()) {
            let mut rng = SeededRng::new(seed);
            let p = init_params(d, k, Activations::default(), &mut rng).unwrap();
            let x: Vec<f64> = (0..d).map(|_| rng.draw_uniform(-3.0, 3.0).unwrap()).collect();
            let out = decode(&p, &encode(&p, &x).unwrap()).unwrap();
            prop_assert_eq!(out.len(), d);
        }

        #[test]
        fn loss_decomposes(seed in any::<u64>(), lambda in 0.0f64..5.0) {
            let mut rng = SeededRng::new(seed);
            let p = init_params(6, 3, Activations::default(), &mut rng).unwrap();
            let data = (0..24).map(|_| rng.draw_uniform(-2.0, 2.0).unwrap()).collect();
            let x = Matrix::from_vec(4, 6, data).unwrap();
            let l = evaluate_loss(&p, &x, lambda).unwrap();
            prop_assert_eq!(l.l_total, l.l_rec + l.l_reg);
        }
    }
}
