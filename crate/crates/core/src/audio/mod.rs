//! Audio features: magnitude spectrograms with phase, SNR-controlled mixing and WAV I/O.

mod mix;
mod stft;
mod wav;

pub use mix::{mix_at_snr, SnrMix};
pub use stft::{hann_periodic, istft, istft_complex, phase_transfer, stft, Spectrogram, StftConfig};
pub use wav::{read_wav, write_wav, WavFormat};
