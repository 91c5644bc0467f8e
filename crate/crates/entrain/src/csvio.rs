//! CSV import and export for tracks, segments, feature points and
//! questionnaire scores.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use entrain_core::features::UtteranceFeaturePoint;
use entrain_core::perception::{check_unique, PerceptionRecord};
use entrain_core::preprocess::ResampledTrack;
use entrain_core::prosody::FrameTrack;
use entrain_core::segmentation::UtteranceSegment;
use entrain_core::Speaker;
use serde::Deserialize;

use crate::error::{io_err, parse_err, Error, Result};

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

fn finish<W: Write>(w: csv::Writer<W>, path: &Path) -> Result<()> {
    w.into_inner()
        .map_err(|e| io_err(path)(e.into_error()))?
        .flush()
        .map_err(io_err(path))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(source) => io_err(path)(source),
        kind => parse_err(path, format!("{kind:?}")),
    }
}

fn create(path: &Path) -> Result<csv::Writer<File>> {
    Ok(writer(File::create(path).map_err(io_err(path))?))
}

/// Frame-level debug dump: `time_s,value,voiced`. Missing values are empty.
pub fn write_frame_track(path: &Path, track: &FrameTrack) -> Result<()> {
    let mut w = create(path)?;
    let e = csv_err(path);
    w.write_record(["time_s", "value", "voiced"]).map_err(&e)?;
    for (i, t) in track.times().enumerate() {
        let value = track.value(i).map(|v| v.to_string()).unwrap_or_default();
        w.write_record([t.to_string(), value, u8::from(track.active(i)).to_string()])
            .map_err(&e)?;
    }
    finish(w, path)
}

pub fn write_segments(path: &Path, segments: &[UtteranceSegment]) -> Result<()> {
    let mut w = create(path)?;
    let e = csv_err(path);
    w.write_record(["speaker", "start_s", "end_s"]).map_err(&e)?;
    for s in segments {
        w.write_record([
            s.speaker.as_str().to_string(),
            s.start_time.to_string(),
            s.end_time.to_string(),
        ])
        .map_err(&e)?;
    }
    finish(w, path)
}

#[derive(Deserialize)]
struct SegmentRow {
    speaker: String,
    start_s: f64,
    end_s: f64,
}

/// Reads `speaker,start_s,end_s` rows. Segments come back sorted per speaker;
/// overlaps within a speaker are rejected.
pub fn read_segments(path: &Path) -> Result<Vec<UtteranceSegment>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err(path))?;
    let mut out = Vec::new();
    for (line, row) in r.deserialize::<SegmentRow>().enumerate() {
        let row = row.map_err(csv_err(path))?;
        let speaker = Speaker::parse(&row.speaker)
            .ok_or_else(|| parse_err(path, format!("row {}: unknown speaker {:?}", line + 1, row.speaker)))?;
        let seg = UtteranceSegment::new(speaker, row.start_s, row.end_s)
            .map_err(|e| parse_err(path, format!("row {}: {e}", line + 1)))?;
        out.push(seg);
    }
    entrain_core::segmentation::validate_segments(&mut out).map_err(|e| parse_err(path, e))?;
    Ok(out)
}

pub fn write_feature_points(path: &Path, points: &[UtteranceFeaturePoint]) -> Result<()> {
    let mut w = create(path)?;
    let e = csv_err(path);
    w.write_record(["speaker", "feature", "time_s", "value"]).map_err(&e)?;
    for p in points {
        w.write_record([
            p.speaker.as_str().to_string(),
            p.feature.as_str().to_string(),
            p.time.to_string(),
            p.value.to_string(),
        ])
        .map_err(&e)?;
    }
    finish(w, path)
}

pub fn write_tracks(path: &Path, tracks: &[ResampledTrack]) -> Result<()> {
    let mut w = create(path)?;
    let e = csv_err(path);
    w.write_record(["feature", "speaker", "time_s", "zvalue"]).map_err(&e)?;
    for tr in tracks {
        for (t, v) in tr.grid.times().zip(&tr.values) {
            w.write_record([
                tr.feature.as_str().to_string(),
                tr.speaker.as_str().to_string(),
                t.to_string(),
                v.to_string(),
            ])
            .map_err(&e)?;
        }
    }
    finish(w, path)
}

#[derive(Deserialize)]
struct PerceptionRow {
    dyad_id: String,
    scale: String,
    raw: f64,
    max: f64,
}

/// Reads `dyad_id,scale,raw,max` rows and normalizes each score.
pub fn load_perception_csv(path: &Path) -> Result<Vec<PerceptionRecord>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err(path))?;
    let headers = r.headers().map_err(csv_err(path))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["dyad_id", "scale", "raw", "max"] {
        return Err(parse_err(
            path,
            format!("expected header dyad_id,scale,raw,max, got {headers:?}"),
        ));
    }
    let mut out = Vec::new();
    for row in r.deserialize::<PerceptionRow>() {
        let row = row.map_err(csv_err(path))?;
        let rec =
            PerceptionRecord::new(&row.dyad_id, &row.scale, row.raw, row.max).map_err(|source| Error::Analysis {
                path: path.into(),
                source,
            })?;
        out.push(rec);
    }
    check_unique(&out).map_err(|source| Error::Analysis {
        path: path.into(),
        source,
    })?;
    Ok(out)
}
