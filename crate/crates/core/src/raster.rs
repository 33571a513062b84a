//! Dense `height × width × channels` maps and their binary file format.
//!
//! Layout: magic `CSRM`, version byte (1), dtype byte (0 = u8, 1 = f32),
//! then little-endian u32 height, width, channels, then the row-major,
//! channel-last payload (f32 values little-endian).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CSRM";
pub const FORMAT_VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    U8 = 0,
    F32 = 1,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RasterData {
    U8(Vec<u8>),
    F32(Vec<f32>),
}

impl RasterData {
    fn len(&self) -> usize {
        match self {
            RasterData::U8(v) => v.len(),
            RasterData::F32(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RasterMap {
    height: usize,
    width: usize,
    channels: usize,
    data: RasterData,
}

impl RasterMap {
    pub fn new(height: usize, width: usize, channels: usize, data: RasterData) -> Result<Self> {
        let expected = height
            .checked_mul(width)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| Error::invalid("raster dimensions overflow"))?;
        if data.len() != expected {
            return Err(Error::inconsistent(format!(
                "raster {height}x{width}x{channels} needs {expected} values, got {}",
                data.len()
            )));
        }
        for dim in [height, width, channels] {
            if dim > u32::MAX as usize {
                return Err(Error::invalid("raster dimension exceeds u32"));
            }
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros_u8(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            data: RasterData::U8(vec![0; height * width * channels]),
        }
    }

    pub fn zeros_f32(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            data: RasterData::F32(vec![0.0; height * width * channels]),
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn dtype(&self) -> DType {
        match self.data {
            RasterData::U8(_) => DType::U8,
            RasterData::F32(_) => DType::F32,
        }
    }

    pub fn data(&self) -> &RasterData {
        &self.data
    }

    pub fn as_u8(&self) -> Option<&[u8]> {
        match &self.data {
            RasterData::U8(v) => Some(v),
            RasterData::F32(_) => None,
        }
    }

    pub fn as_f32(&self) -> Option<&[f32]> {
        match &self.data {
            RasterData::F32(v) => Some(v),
            RasterData::U8(_) => None,
        }
    }

    pub(crate) fn u8_mut(&mut self) -> &mut [u8] {
        match &mut self.data {
            RasterData::U8(v) => v,
            RasterData::F32(_) => panic!("raster is not u8"),
        }
    }

    pub(crate) fn f32_mut(&mut self) -> &mut [f32] {
        match &mut self.data {
            RasterData::F32(v) => v,
            RasterData::U8(_) => panic!("raster is not f32"),
        }
    }

    #[inline]
    pub fn offset(&self, row: usize, col: usize, channel: usize) -> usize {
        (row * self.width + col) * self.channels + channel
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        let at = self.offset(row, col, channel);
        match &self.data {
            RasterData::U8(v) => v[at] as f64,
            RasterData::F32(v) => v[at] as f64,
        }
    }

    /// Copy of one channel as a single-channel map of the same dtype.
    pub fn channel(&self, channel: usize) -> Result<RasterMap> {
        if channel >= self.channels {
            return Err(Error::invalid(format!(
                "channel {channel} out of range for {} channels",
                self.channels
            )));
        }
        let pick = |i: usize| i * self.channels + channel;
        let n = self.height * self.width;
        let data = match &self.data {
            RasterData::U8(v) => RasterData::U8((0..n).map(|i| v[pick(i)]).collect()),
            RasterData::F32(v) => RasterData::F32((0..n).map(|i| v[pick(i)]).collect()),
        };
        RasterMap::new(self.height, self.width, 1, data)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&[FORMAT_VERSION, self.dtype() as u8])?;
        for dim in [self.height, self.width, self.channels] {
            w.write_all(&(dim as u32).to_le_bytes())?;
        }
        match &self.data {
            RasterData::U8(v) => w.write_all(v)?,
            RasterData::F32(v) => {
                let mut buf = Vec::with_capacity(v.len() * 4);
                for x in v {
                    buf.extend_from_slice(&x.to_le_bytes());
                }
                w.write_all(&buf)?;
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut header = [0u8; 18];
        r.read_exact(&mut header)
            .map_err(|_| Error::parse(None, "raster header truncated"))?;
        if &header[0..4] != MAGIC {
            return Err(Error::parse(None, "not a raster map (bad magic)"));
        }
        if header[4] != FORMAT_VERSION {
            return Err(Error::Version {
                found: header[4],
                expected: FORMAT_VERSION,
            });
        }
        let dim = |at: usize| u32::from_le_bytes(header[at..at + 4].try_into().unwrap()) as usize;
        let (height, width, channels) = (dim(6), dim(10), dim(14));
        let n = height
            .checked_mul(width)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| Error::parse(None, "raster dimensions overflow"))?;
        let elem = match header[5] {
            0 => 1,
            1 => 4,
            code => return Err(Error::parse(None, format!("unknown raster dtype code {code}"))),
        };
        let mut payload = Vec::new();
        r.read_to_end(&mut payload)?;
        if payload.len() != n * elem {
            return Err(Error::parse(
                None,
                format!("raster payload has {} bytes, expected {}", payload.len(), n * elem),
            ));
        }
        let data = if elem == 1 {
            RasterData::U8(payload)
        } else {
            RasterData::F32(
                payload
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                    .collect(),
            )
        };
        RasterMap::new(height, width, channels, data)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn header_layout_is_exact() {
        let map = RasterMap::new(2, 3, 1, RasterData::U8(vec![0, 1, 0, 1, 1, 0])).unwrap();
        let mut bytes = Vec::new();
        map.write_to(&mut bytes).unwrap();
        assert_eq!(
            bytes,
            [b'C', b'S', b'R', b'M', 1, 0, 2, 0, 0, 0, 3, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 1, 1, 0]
        );
        let f = RasterMap::new(1, 1, 1, RasterData::F32(vec![1.0])).unwrap();
        let mut bytes = Vec::new();
        f.write_to(&mut bytes).unwrap();
        assert_eq!(bytes[5], 1);
        assert_eq!(&bytes[18..], &1.0f32.to_le_bytes());
    }

    #[test]
    fn rejects_bad_headers() {
        let map = RasterMap::zeros_u8(2, 2, 1);
        let mut bytes = Vec::new();
        map.write_to(&mut bytes).unwrap();

        let mut version = bytes.clone();
        version[4] = 2;
        assert!(matches!(
            RasterMap::read_from(&version[..]),
            Err(Error::Version { found: 2, expected: 1 })
        ));
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(RasterMap::read_from(&magic[..]), Err(Error::Parse { .. })));
        let mut dtype = bytes.clone();
        dtype[5] = 7;
        assert!(matches!(RasterMap::read_from(&dtype[..]), Err(Error::Parse { .. })));
        assert!(matches!(RasterMap::read_from(&bytes[..bytes.len() - 1]), Err(Error::Parse { .. })));
        assert!(matches!(RasterMap::read_from(&bytes[..10]), Err(Error::Parse { .. })));
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(RasterMap::new(2, 2, 2, RasterData::U8(vec![0; 7])).is_err());
    }

    #[test]
    fn channel_extraction() {
        let map = RasterMap::new(1, 2, 2, RasterData::F32(vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(map.channel(1).unwrap().as_f32().unwrap(), &[2.0, 4.0]);
        assert!(map.channel(2).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(h in 0usize..6, w in 0usize..6, c in 1usize..4, seed in any::<u64>(), float in any::<bool>()) {
            let n = h * w * c;
            let data = if float {
                RasterData::F32((0..n).map(|i| f32::from_bits((seed as u32).wrapping_mul(i as u32 + 1))).collect())
            } else {
                RasterData::U8((0..n).map(|i| (seed >> (i % 8)) as u8).collect())
            };
            let map = RasterMap::new(h, w, c, data).unwrap();
            let mut bytes = Vec::new();
            map.write_to(&mut bytes).unwrap();
            let back = RasterMap::read_from(&bytes[..]).unwrap();
            // Compare bit patterns so NaN payloads count as equal.
            let mut again = Vec::new();
            back.write_to(&mut again).unwrap();
            prop_assert_eq!(bytes, again);
            prop_assert_eq!(back.shape(), (h, w, c));
        }
    }
}
