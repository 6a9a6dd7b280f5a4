//! Text checkpoints for dense networks.
//!
//! ```text
//! homeostat-net 1 sizes=4,64,64,2 hidden=relu output=linear
//! <layer 0 weights, row-major, outputs x inputs>
//! <layer 0 biases>
//! ...
//! ```
//!
//! Floats carry 17 significant digits, which round-trips every `f64`.

use std::fmt::Write as _;
use std::path::Path;

use homeostat_core::{Activation, DenseNet};

use crate::error::{LabError, Result};

const MAGIC: &str = "homeostat-net";
const VERSION: u32 = 1;

fn write_row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v:.16e}");
    }
    out.push('\n');
}

pub fn to_text(net: &DenseNet) -> String {
    let sizes = net.sizes().iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    let mut out = format!(
        "{MAGIC} {VERSION} sizes={sizes} hidden={} output={}\n",
        net.hidden_activation().name(),
        net.output_activation().name()
    );
    for layer in net.layers() {
        write_row(&mut out, layer.weights());
        write_row(&mut out, layer.biases());
    }
    out
}

/// Parses [`to_text`] output; `origin` is only used in error messages.
pub fn from_text(text: &str, origin: &Path) -> Result<DenseNet> {
    let bad = |line: usize, message: String| LabError::Checkpoint {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad(1, "empty file".into()))?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some(MAGIC) {
        return Err(bad(1, format!("missing `{MAGIC}` header")));
    }
    match fields.next().map(str::parse::<u32>) {
        Some(Ok(VERSION)) => {}
        other => return Err(bad(1, format!("unsupported format version {other:?}"))),
    }
    let (mut sizes, mut hidden, mut output) = (None, None, None);
    for field in fields {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| bad(1, format!("bad header field `{field}`")))?;
        match k {
            "sizes" => {
                sizes = Some(
                    v.split(',')
                        .map(str::parse::<usize>)
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| bad(1, format!("bad sizes `{v}`")))?,
                )
            }
            "hidden" => hidden = Activation::from_name(v),
            "output" => output = Activation::from_name(v),
            _ => return Err(bad(1, format!("unknown header field `{k}`"))),
        }
    }
    let (Some(sizes), Some(hidden), Some(output)) = (sizes, hidden, output) else {
        return Err(bad(1, "header needs sizes, hidden and output".into()));
    };
    let mut row = |n: usize| -> Result<Vec<f64>> {
        let line = n + 2;
        let text = lines.next().ok_or_else(|| bad(line, "missing tensor line".into()))?;
        text.split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| bad(line, format!("bad number `{t}`"))))
            .collect()
    };
    let mut params = Vec::new();
    for i in 0..sizes.len().saturating_sub(1) {
        let w = row(2 * i)?;
        let b = row(2 * i + 1)?;
        params.push((w, b));
    }
    DenseNet::from_parts(&sizes, hidden, output, params).map_err(|e| bad(1, e.to_string()))
}

pub fn save(net: &DenseNet, path: &Path) -> Result<()> {
    std::fs::write(path, to_text(net)).map_err(|e| LabError::io(path, e))
}

pub fn load(path: &Path) -> Result<DenseNet> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    from_text(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use homeostat_core::rng::{stream, Stream};

    #[test]
    fn bit_exact_round_trip() {
        let mut rng = stream(5, Stream::Init);
        let mut net = DenseNet::new(&[3, 7, 2], Activation::Relu, Activation::Tanh, &mut rng).unwrap();
        // Awkward values: subnormal, negative zero, extremes.
        let w = net.layers_mut()[0].weights_mut();
        w[0] = 5e-324;
        w[1] = -0.0;
        w[2] = f64::MAX;
        w[3] = 0.1 + 0.2;
        let back = from_text(&to_text(&net), Path::new("mem")).unwrap();
        assert_eq!(back.sizes(), net.sizes());
        assert_eq!(back.hidden_activation(), Activation::Relu);
        assert_eq!(back.output_activation(), Activation::Tanh);
        let bits = |n: &DenseNet| n.parameters().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&net));
    }

    #[test]
    fn malformed_files_are_rejected() {
        let p = Path::new("x.ckpt");
        assert!(from_text("", p).is_err());
        assert!(from_text("homeostat-net 2 sizes=1,1 hidden=relu output=linear\n1\n0\n", p).is_err());
        assert!(from_text("homeostat-net 1 sizes=1,1 hidden=relu output=linear\n1\n", p).is_err());
        assert!(from_text("homeostat-net 1 sizes=1,1 hidden=relu output=linear\n1 2\n0\n", p).is_err());
        assert!(from_text("homeostat-net 1 sizes=1,1 hidden=relu output=linear\n1\n0\n", p).is_ok());
    }
}
