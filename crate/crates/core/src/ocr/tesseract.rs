//! Parser for the local engine's TSV dump.
//!
//! Layout: a header line followed by one row per layout element, columns
//! `level page_num block_num par_num line_num word_num left top width height
//! conf text`. Words are level-5 rows; structural rows (page/block/
//! paragraph/line) carry `conf -1` and no word text.

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::ocr::OcrToken;

const COLUMNS: usize = 12;
const WORD_LEVEL: u32 = 5;

/// Parses a TSV dump into word tokens.
///
/// Confidence is rescaled from the engine's `[0, 100]` range to `[0, 1]`.
/// Rows with negative confidence are structural, not words, and are
/// dropped without error.
pub fn parse_local_engine_output(bytes: &[u8]) -> Result<Vec<OcrToken>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::MalformedRow {
        line: 0,
        reason: format!("input is not UTF-8: {e}"),
    })?;

    let mut tokens = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        // splitn keeps tabs inside the trailing text column intact
        let mut fields: Vec<&str> = line.splitn(COLUMNS, '\t').collect();
        if fields[0] == "level" {
            continue; // header
        }
        if fields.len() == COLUMNS - 1 {
            // editors routinely trim the trailing tab of structural rows,
            // losing their empty text column
            fields.push("");
        }
        if fields.len() < COLUMNS {
            return Err(Error::MalformedRow {
                line: line_no,
                reason: format!("expected {COLUMNS} columns, found {}", fields.len()),
            });
        }

        let num = |i: usize, name: &str| -> Result<f64> {
            fields[i].trim().parse::<f64>().map_err(|_| Error::MalformedRow {
                line: line_no,
                reason: format!("column {name} is not numeric: {:?}", fields[i]),
            })
        };

        let level = num(0, "level")? as u32;
        let conf = num(10, "conf")?;
        if level != WORD_LEVEL || conf < 0.0 {
            continue;
        }
        if conf > 100.0 {
            return Err(Error::MalformedRow {
                line: line_no,
                reason: format!("confidence {conf} exceeds 100"),
            });
        }

        let left = num(6, "left")?;
        let top = num(7, "top")?;
        let width = num(8, "width")?;
        let height = num(9, "height")?;
        let word = fields[11].trim();
        if word.is_empty() {
            continue; // whitespace-only word rows carry no token
        }

        let bbox = BBox::new(left, top, left + width, top + height).map_err(|_| {
            Error::MalformedRow {
                line: line_no,
                reason: format!("degenerate box left={left} top={top} width={width} height={height}"),
            }
        })?;
        tokens.push(OcrToken { text: word.to_string(), bbox, confidence: conf / 100.0 });
    }
    Ok(tokens)
}
