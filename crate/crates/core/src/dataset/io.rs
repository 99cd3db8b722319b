use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use csv::{ReaderBuilder, StringRecord, WriterBuilder};

use super::{DatasetError, Result, SensingSample, SequenceSample, NUM_BEAMS};
use crate::scenario::VisualFeature;

const SAMPLE_LEAD: [&str; 13] = [
    "flight_id", "t", "gps_e", "gps_n", "height", "distance", "speed", "pitch", "roll", "vis_u",
    "vis_v", "vis_size", "visible",
];

pub const SEQUENCE_HEADER: [&str; 5] = ["flight_id", "t_start", "label_t1", "label_t2", "label_t3"];

/// Column names of the sample table.
pub static SAMPLE_HEADER: std::sync::LazyLock<Vec<String>> = std::sync::LazyLock::new(|| {
    SAMPLE_LEAD
        .iter()
        .map(|s| s.to_string())
        .chain((0..NUM_BEAMS).map(|i| format!("p{i}")))
        .chain(std::iter::once("label".to_string()))
        .collect()
});

fn csv_err(e: csv::Error) -> DatasetError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => DatasetError::Io(io),
        other => DatasetError::Schema(format!("{other:?}")),
    }
}

fn sample_row(s: &SensingSample) -> Vec<String> {
    let v = &s.visual;
    let mut row = vec![
        s.flight_id.to_string(),
        s.t.to_string(),
        s.gps[0].to_string(),
        s.gps[1].to_string(),
        s.height.to_string(),
        s.distance.to_string(),
        s.speed.to_string(),
        s.pitch.to_string(),
        s.roll.to_string(),
        v.center_u.to_string(),
        v.center_v.to_string(),
        v.apparent_size.to_string(),
        u8::from(v.visible).to_string(),
    ];
    row.extend(s.power32.iter().map(f64::to_string));
    row.push(s.label.to_string());
    row
}

pub fn write_samples<W: Write>(samples: &[SensingSample], out: W) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(out);
    w.write_record(SAMPLE_HEADER.iter()).map_err(csv_err)?;
    for s in samples {
        if s.power32.len() != NUM_BEAMS {
            return Err(DatasetError::Schema(format!(
                "sample (flight {}, t {}) has {} powers",
                s.flight_id,
                s.t,
                s.power32.len()
            )));
        }
        w.write_record(sample_row(s)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_samples(samples: &[SensingSample], path: &Path) -> Result<()> {
    write_samples(samples, BufWriter::new(File::create(path)?))
}

fn field<T: FromStr>(rec: &StringRecord, i: usize, line: u64) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = rec.get(i).unwrap_or("");
    raw.trim().parse().map_err(|e: T::Err| DatasetError::Parse {
        line,
        message: format!("column {i} ({raw:?}): {e}"),
    })
}

fn parse_visible(raw: &str, line: u64) -> Result<bool> {
    match raw.trim() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(DatasetError::Parse {
            line,
            message: format!("visible flag {other:?}"),
        }),
    }
}

pub fn read_samples<R: Read>(input: R) -> Result<Vec<SensingSample>> {
    let mut r = ReaderBuilder::new().flexible(true).from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(SAMPLE_HEADER.iter().map(String::as_str)) {
        return Err(DatasetError::Schema(format!(
            "unexpected sample header with {} columns",
            header.len()
        )));
    }
    let width = SAMPLE_HEADER.len();
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != width {
            return Err(DatasetError::Schema(format!(
                "line {line}: expected {width} columns, found {}",
                rec.len()
            )));
        }
        let power32 = (0..NUM_BEAMS)
            .map(|i| field(&rec, 13 + i, line))
            .collect::<Result<Vec<f64>>>()?;
        let label: usize = field(&rec, 13 + NUM_BEAMS, line)?;
        if label >= NUM_BEAMS {
            return Err(DatasetError::Parse {
                line,
                message: format!("label {label} out of range"),
            });
        }
        out.push(SensingSample {
            flight_id: field(&rec, 0, line)?,
            t: field(&rec, 1, line)?,
            gps: [field(&rec, 2, line)?, field(&rec, 3, line)?],
            height: field(&rec, 4, line)?,
            distance: field(&rec, 5, line)?,
            speed: field(&rec, 6, line)?,
            pitch: field(&rec, 7, line)?,
            roll: field(&rec, 8, line)?,
            visual: VisualFeature {
                center_u: field(&rec, 9, line)?,
                center_v: field(&rec, 10, line)?,
                apparent_size: field(&rec, 11, line)?,
                visible: parse_visible(&rec[12], line)?,
            },
            power32,
            label,
        });
    }
    Ok(out)
}

pub fn load_samples(path: &Path) -> Result<Vec<SensingSample>> {
    read_samples(BufReader::new(File::open(path)?))
}

pub fn write_sequences<W: Write>(seqs: &[SequenceSample], out: W) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(out);
    w.write_record(SEQUENCE_HEADER).map_err(csv_err)?;
    for s in seqs {
        if s.futures.len() != 3 {
            return Err(DatasetError::Schema(format!(
                "sequence files hold 3 futures, got {}",
                s.futures.len()
            )));
        }
        let mut row = vec![s.flight_id.to_string(), s.t_start.to_string()];
        row.extend(s.futures.iter().map(usize::to_string));
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_sequences(seqs: &[SequenceSample], path: &Path) -> Result<()> {
    write_sequences(seqs, BufWriter::new(File::create(path)?))
}

/// Rebuilds sequences from their `(flight_id, t_start)` references into a
/// sample table, checking the stored futures against it.
pub fn read_sequences<R: Read>(input: R, samples: &[SensingSample], r: usize) -> Result<Vec<SequenceSample>> {
    let index: HashMap<(usize, usize), usize> = samples
        .iter()
        .enumerate()
        .map(|(i, s)| ((s.flight_id, s.t), i))
        .collect();
    let mut rd = ReaderBuilder::new().flexible(true).from_reader(input);
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().ne(SEQUENCE_HEADER) {
        return Err(DatasetError::Schema("unexpected sequence header".into()));
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != SEQUENCE_HEADER.len() {
            return Err(DatasetError::Schema(format!(
                "line {line}: expected {} columns, found {}",
                SEQUENCE_HEADER.len(),
                rec.len()
            )));
        }
        let flight_id: usize = field(&rec, 0, line)?;
        let t_start: usize = field(&rec, 1, line)?;
        let futures = (2..5).map(|i| field(&rec, i, line)).collect::<Result<Vec<usize>>>()?;
        let lookup = |t: usize| {
            index
                .get(&(flight_id, t))
                .map(|&i| &samples[i])
                .ok_or(DatasetError::MissingSample { flight_id, t })
        };
        let window = (t_start..t_start + r)
            .map(|t| lookup(t).cloned())
            .collect::<Result<Vec<_>>>()?;
        for (h, &f) in futures.iter().enumerate() {
            let truth = lookup(t_start + r + h)?.label;
            if truth != f {
                return Err(DatasetError::Parse {
                    line,
                    message: format!("future {} label {f} disagrees with sample label {truth}", h + 1),
                });
            }
        }
        out.push(SequenceSample {
            flight_id,
            t_start,
            window,
            futures,
        });
    }
    Ok(out)
}

pub fn load_sequences(path: &Path, samples: &[SensingSample], r: usize) -> Result<Vec<SequenceSample>> {
    read_sequences(BufReader::new(File::open(path)?), samples, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::build_sequences;

    fn sample(t: usize) -> SensingSample {
        let power32: Vec<f64> = (0..NUM_BEAMS).map(|i| 1.0 / (1.0 + (i as f64 - t as f64 % 32.0).abs()) + 1e-17 * i as f64).collect();
        SensingSample {
            flight_id: 4,
            t,
            gps: [0.1 + t as f64 / 3.0, -7.000000000000001],
            height: 33.3,
            distance: std::f64::consts::PI * 20.0,
            speed: 1e-7,
            pitch: -0.123456789012345,
            roll: 2.5e-300,
            visual: VisualFeature {
                center_u: 0.25,
                center_v: 1.0 / 3.0,
                apparent_size: 0.0123,
                visible: t.is_multiple_of(2),
            },
            power32,
            label: t % 32,
        }
    }

    #[test]
    fn samples_round_trip_exactly() {
        let s: Vec<_> = (0..40).map(sample).collect();
        let mut buf = Vec::new();
        write_samples(&s, &mut buf).unwrap();
        assert_eq!(read_samples(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn nan_centres_survive() {
        let mut s = sample(1);
        s.visual.center_u = f64::NAN;
        let mut buf = Vec::new();
        write_samples(&[s], &mut buf).unwrap();
        assert!(read_samples(buf.as_slice()).unwrap()[0].visual.center_u.is_nan());
    }

    #[test]
    fn short_power_row_is_a_schema_error() {
        let mut buf = Vec::new();
        write_samples(&[sample(0), sample(1)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        let mut cols: Vec<&str> = lines[2].split(',').collect();
        cols.remove(20);
        lines[2] = cols.join(",");
        let err = read_samples(lines.join("\n").as_bytes()).unwrap_err();
        match err {
            DatasetError::Schema(m) => assert!(m.contains("line 3"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_number_names_the_line() {
        let mut buf = Vec::new();
        write_samples(&[sample(0), sample(1), sample(2)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replacen("33.3", "abc", 3);
        let text = text.replacen("abc", "33.3", 2);
        match read_samples(text.as_bytes()).unwrap_err() {
            DatasetError::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn header_only_file_is_empty() {
        let text = SAMPLE_HEADER.join(",") + "\n";
        assert!(read_samples(text.as_bytes()).unwrap().is_empty());
        assert!(matches!(
            read_samples("a,b,c\n".as_bytes()),
            Err(DatasetError::Schema(_))
        ));
    }

    #[test]
    fn sequences_round_trip_through_references() {
        let s: Vec<_> = (0..30).map(sample).collect();
        let seqs = build_sequences(&s, 8, 3);
        let mut buf = Vec::new();
        write_sequences(&seqs, &mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("flight_id,t_start,label_t1,label_t2,label_t3\n"));
        assert_eq!(read_sequences(buf.as_slice(), &s, 8).unwrap(), seqs);
        assert!(matches!(
            read_sequences(buf.as_slice(), &s[..20], 8),
            Err(DatasetError::MissingSample { .. })
        ));
    }
}
