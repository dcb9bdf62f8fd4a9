// Minimal binary PNM (P5/P6) reader and writer so the adapter has no native
// image dependencies. 8-bit only, which matches the toolkit's corpora.
import * as fs from 'node:fs';

export interface Image {
  width: number;
  height: number;
  channels: 1 | 3;
  // row-major, channel-interleaved, values in [0, 255]
  data: Float64Array;
}

export class ImageFormatError extends Error {}

function parseHeader(buf: Buffer): { magic: string; width: number; height: number; maxval: number; offset: number } {
  const tokens: string[] = [];
  let i = 0;
  while (tokens.length < 4 && i < buf.length) {
    const ch = String.fromCharCode(buf[i]);
    if (ch === '#') {
      while (i < buf.length && buf[i] !== 0x0a) i++;
      i++;
    } else if (/\s/.test(ch)) {
      i++;
    } else {
      let tok = '';
      while (i < buf.length && !/\s/.test(String.fromCharCode(buf[i]))) {
        tok += String.fromCharCode(buf[i]);
        i++;
      }
      tokens.push(tok);
    }
  }
  if (tokens.length < 4) throw new ImageFormatError('truncated PNM header');
  i++; // single whitespace byte after maxval
  return {
    magic: tokens[0],
    width: parseInt(tokens[1], 10),
    height: parseInt(tokens[2], 10),
    maxval: parseInt(tokens[3], 10),
    offset: i,
  };
}

export function readImage(file: string): Image {
  const buf = fs.readFileSync(file);
  const { magic, width, height, maxval, offset } = parseHeader(buf);
  if (magic !== 'P5' && magic !== 'P6') {
    throw new ImageFormatError(`unsupported format '${magic}' in ${file}`);
  }
  if (maxval !== 255) throw new ImageFormatError(`unsupported maxval ${maxval}`);
  const channels = magic === 'P6' ? 3 : 1;
  const n = width * height * channels;
  if (buf.length - offset < n) throw new ImageFormatError(`truncated pixel data in ${file}`);
  const data = new Float64Array(n);
  for (let k = 0; k < n; k++) data[k] = buf[offset + k];
  return { width, height, channels: channels as 1 | 3, data };
}

export function writeImage(img: Image, file: string): void {
  const magic = img.channels === 3 ? 'P6' : 'P5';
  const header = Buffer.from(`${magic}\n${img.width} ${img.height}\n255\n`, 'ascii');
  const pixels = Buffer.alloc(img.data.length);
  for (let k = 0; k < img.data.length; k++) {
    pixels[k] = Math.min(255, Math.max(0, Math.floor(img.data[k] + 0.5)));
  }
  fs.writeFileSync(file, Buffer.concat([header, pixels]));
}

export function toGrayscale(img: Image): Float64Array {
  const n = img.width * img.height;
  const g = new Float64Array(n);
  if (img.channels === 1) {
    g.set(img.data);
    return g;
  }
  for (let k = 0; k < n; k++) {
    g[k] = 0.299 * img.data[3 * k] + 0.587 * img.data[3 * k + 1] + 0.114 * img.data[3 * k + 2];
  }
  return g;
}
