/** Thumbnails come straight from the platforms at the highest zoom only; the
 * server never proxies images. Items without a derivable thumbnail (Netflix
 * exports carry no per-episode URL) render as title cards instead. */

const YOUTUBE_ID = /(?:v=|youtu\.be\/|\/shorts\/)([\w-]{6,})/;

export function thumbnailUrl(videoUrl: string | null): string | null {
  if (!videoUrl) return null;
  const match = videoUrl.match(YOUTUBE_ID);
  if (match) return `https://i.ytimg.com/vi/${match[1]}/mqdefault.jpg`;
  return null;
}
